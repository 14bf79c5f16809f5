import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from seguq.aggregate import AggregationMode, aggregate_mean, per_sample_slice
from seguq.datamodel import SampleStack
from seguq.errors import IndexOutOfRangeError, ModeShapeMismatchError

from conftest import random_stack


def stack_from_pixel_samples(samples, k, t):
    values = np.array(samples, dtype=np.float32).reshape(k, t, 1, 1)
    return SampleStack(values)


class TestAggregateMean:
    def test_single_sample_identity(self):
        stack = stack_from_pixel_samples([0.7], 1, 1)
        out = aggregate_mean(stack, AggregationMode.COMBINED)
        assert out.values[0, 0] == pytest.approx(0.7, abs=1e-7)

    def test_hand_mean(self):
        stack = stack_from_pixel_samples([0.2, 0.4, 0.6, 0.8], 2, 2)
        out = aggregate_mean(stack, AggregationMode.COMBINED)
        assert out.values[0, 0] == pytest.approx(0.5, abs=1e-7)

    def test_constant_stack(self, rng):
        values = np.full((3, 2, 4, 4), 0.3, dtype=np.float32)
        out = aggregate_mean(SampleStack(values), AggregationMode.COMBINED)
        assert np.allclose(out.values, np.float32(0.3), atol=0)

    def test_accumulates_in_float64(self):
        # 15 identical float32 values: a float32 accumulator would drift.
        v = np.float32(0.1)
        stack = stack_from_pixel_samples([v] * 15, 5, 3)
        out = aggregate_mean(stack, AggregationMode.COMBINED)
        assert out.values[0, 0] == pytest.approx(float(v), abs=1e-12)

    def test_mc_mode_accepts_k1_only(self, make_stack):
        ok = make_stack(k=1, t=4)
        aggregate_mean(ok, AggregationMode.MC_DROPOUT)
        bad = make_stack(k=2, t=4)
        with pytest.raises(ModeShapeMismatchError):
            aggregate_mean(bad, AggregationMode.MC_DROPOUT)

    def test_ensemble_mode_accepts_t1_only(self, make_stack):
        ok = make_stack(k=4, t=1)
        aggregate_mean(ok, AggregationMode.DEEP_ENSEMBLE)
        bad = make_stack(k=4, t=2)
        with pytest.raises(ModeShapeMismatchError):
            aggregate_mean(bad, AggregationMode.DEEP_ENSEMBLE)

    def test_combined_collapses_to_mc_and_ensemble(self, rng):
        mc_stack = random_stack(rng, k=1, t=5)
        a = aggregate_mean(mc_stack, AggregationMode.MC_DROPOUT)
        b = aggregate_mean(mc_stack, AggregationMode.COMBINED)
        assert np.array_equal(a.values, b.values)

        ens_stack = random_stack(rng, k=5, t=1)
        a = aggregate_mean(ens_stack, AggregationMode.DEEP_ENSEMBLE)
        b = aggregate_mean(ens_stack, AggregationMode.COMBINED)
        assert np.array_equal(a.values, b.values)

    @settings(max_examples=30, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1))
    def test_permutation_invariance(self, seed):
        rng = np.random.default_rng(seed)
        stack = random_stack(rng, k=2, t=3, h=3, w=3)
        flat = stack.samples().copy()
        rng.shuffle(flat, axis=0)
        shuffled = SampleStack(flat.reshape(stack.values.shape))
        a = aggregate_mean(stack, AggregationMode.COMBINED)
        b = aggregate_mean(shuffled, AggregationMode.COMBINED)
        assert np.allclose(a.values, b.values, atol=0)

    @settings(max_examples=30, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1))
    def test_mean_between_min_and_max(self, seed):
        rng = np.random.default_rng(seed)
        stack = random_stack(rng, k=3, t=2, h=4, w=4)
        out = aggregate_mean(stack, AggregationMode.COMBINED).values
        flat = stack.samples().astype(np.float64)
        assert (out >= flat.min(axis=0) - 1e-12).all()
        assert (out <= flat.max(axis=0) + 1e-12).all()


class TestPerSampleSlice:
    def test_whole_payload_for_single_sample(self, rng):
        stack = random_stack(rng, k=1, t=1)
        out = per_sample_slice(stack, 0, 0)
        assert np.allclose(out.values, stack.values[0, 0].astype(np.float64), atol=0)

    def test_matches_offset_arithmetic(self, rng):
        stack = random_stack(rng, k=3, t=4, h=2, w=5)
        flat = stack.values.ravel()
        for k_i, t_i in [(0, 0), (2, 3), (1, 2)]:
            out = per_sample_slice(stack, k_i, t_i)
            start = (k_i * stack.t + t_i) * stack.height * stack.width
            expected = flat[start : start + stack.height * stack.width]
            assert np.array_equal(
                out.values.astype(np.float32).ravel(), expected
            )

    @pytest.mark.parametrize("k_i,t_i", [(1, 0), (0, 1), (-1, 0), (0, -1)])
    def test_out_of_range_indices(self, rng, k_i, t_i):
        stack = random_stack(rng, k=1, t=1)
        with pytest.raises(IndexOutOfRangeError):
            per_sample_slice(stack, k_i, t_i)
