import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from seguq.aggregate import AggregationMode, aggregate_mean
from seguq.datamodel import LN2, ProbabilityMap, SampleStack
from seguq.errors import DomainError
from seguq.uncertainty import (
    UncertaintyMaps,
    UncertaintySummary,
    binary_entropy,
    entropy_map,
    mutual_information_map,
    nats_to_bits,
    per_pass_entropies,
    summarize_uncertainty,
)

from conftest import random_stack
from oracles import oracle_entropy, oracle_mean, oracle_mi, oracle_population_std


def pixel_stack(samples):
    values = np.array(samples, dtype=np.float32).reshape(len(samples), 1, 1, 1)
    return SampleStack(values)


class TestBinaryEntropy:
    def test_fair_coin_is_ln2(self):
        assert binary_entropy(0.5) == pytest.approx(LN2, abs=1e-12)
        assert binary_entropy(0.5) == pytest.approx(0.6931, abs=1e-4)

    def test_degenerate_limits(self):
        assert binary_entropy(0.0) == 0.0
        assert binary_entropy(1.0) == 0.0

    def test_quarter(self):
        assert binary_entropy(0.25) == pytest.approx(0.5623, abs=1e-4)

    @pytest.mark.parametrize("p", [-0.001, 1.001, math.nan])
    def test_domain_error(self, p):
        with pytest.raises(DomainError):
            binary_entropy(p)

    @settings(max_examples=100, deadline=None)
    @given(p=st.floats(0.0, 1.0, allow_nan=False))
    def test_symmetry_and_oracle(self, p):
        # 1.0 - p itself rounds for tiny p, where the entropy slope is
        # ~log(1/p); that bounds the achievable agreement near 1e-13.
        assert binary_entropy(p) == pytest.approx(binary_entropy(1.0 - p), abs=1e-12)
        assert binary_entropy(p) == pytest.approx(oracle_entropy(p), abs=1e-13)

    @settings(max_examples=50, deadline=None)
    @given(p=st.floats(0.0, 1.0, allow_nan=False))
    def test_bounds(self, p):
        assert 0.0 <= binary_entropy(p) <= LN2 + 1e-15


class TestEntropyMap:
    def test_constant_maps(self):
        half = entropy_map(ProbabilityMap(np.full((3, 3), 0.5)))
        assert np.allclose(half, LN2, atol=1e-12)
        zero = entropy_map(ProbabilityMap(np.zeros((2, 2))))
        one = entropy_map(ProbabilityMap(np.ones((2, 2))))
        assert np.all(zero == 0.0) and np.all(one == 0.0)

    def test_matches_scalar_oracle_pointwise(self, rng):
        values = rng.random((5, 7))
        field = entropy_map(ProbabilityMap(values))
        for r in range(5):
            for c in range(7):
                assert field[r, c] == pytest.approx(
                    oracle_entropy(values[r, c]), abs=1e-12
                )


class TestMutualInformationMap:
    def test_identical_samples_give_exact_zero(self):
        # 15 equal samples: a naive mean would not reproduce the value
        # exactly, so this guards the exact-zero contract.
        stack = SampleStack(np.full((5, 3, 2, 2), 0.3, dtype=np.float32))
        maps = mutual_information_map(stack)
        assert np.all(maps.mutual_information == 0.0)

    def test_maximal_disagreement(self):
        maps = mutual_information_map(pixel_stack([0.0, 1.0]))
        assert maps.mutual_information[0, 0] == pytest.approx(LN2, abs=1e-4)
        assert maps.entropy[0, 0] == pytest.approx(LN2, abs=1e-12)

    def test_hand_case(self):
        maps = mutual_information_map(pixel_stack([0.2, 0.8]))
        assert maps.entropy[0, 0] == pytest.approx(LN2, abs=1e-6)
        assert maps.mutual_information[0, 0] == pytest.approx(0.1927, abs=1e-4)
        # mean per-sample entropy term, via the identity MI = H - that term
        term = maps.entropy[0, 0] - maps.mutual_information[0, 0]
        assert term == pytest.approx(0.5004, abs=1e-4)

    @settings(max_examples=20, deadline=None)
    @given(
        k=st.integers(1, 5),
        t=st.integers(1, 5),
        seed=st.integers(0, 2**32 - 1),
    )
    def test_matches_brute_force_oracle(self, k, t, seed):
        rng = np.random.default_rng(seed)
        stack = random_stack(rng, k=k, t=t, h=4, w=4)
        maps = mutual_information_map(stack)
        flat = stack.samples()
        for r in range(4):
            for c in range(4):
                samples = [float(flat[i, r, c]) for i in range(k * t)]
                assert abs(maps.mutual_information[r, c] - oracle_mi(samples)) < 1e-10
                assert abs(
                    maps.entropy[r, c] - oracle_entropy(oracle_mean(samples))
                ) < 1e-10

    def test_entropy_field_matches_entropy_of_mean(self, rng):
        stack = random_stack(rng, k=3, t=3, h=6, w=6)
        maps = mutual_information_map(stack)
        mean = aggregate_mean(stack, AggregationMode.COMBINED)
        assert np.allclose(maps.entropy, entropy_map(mean), atol=1e-12)

    @settings(max_examples=25, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1))
    def test_bounds_and_concavity(self, seed):
        rng = np.random.default_rng(seed)
        stack = random_stack(rng, k=2, t=4, h=5, w=5)
        maps = mutual_information_map(stack)
        assert (maps.mutual_information >= 0.0).all()
        assert (maps.mutual_information <= maps.entropy + 1e-15).all()
        assert (maps.entropy <= LN2 + 1e-12).all()
        # concavity: entropy of the mean dominates the mean of entropies
        per_pass = per_pass_entropies(stack).values
        mean_sample_entropy = per_pass.reshape(-1, 5, 5).mean(axis=0)
        assert (maps.entropy >= mean_sample_entropy - 1e-10).all()


class TestPerPassEntropies:
    def test_values_match_oracle(self, rng):
        stack = random_stack(rng, k=2, t=2, h=3, w=3)
        ent = per_pass_entropies(stack)
        assert ent.values.shape == stack.values.shape
        for idx in np.ndindex(stack.values.shape):
            expected = oracle_entropy(float(stack.values[idx]))
            assert ent.values[idx] == pytest.approx(expected, abs=1e-12)


class TestUncertaintyMaps:
    def test_rejects_mi_above_entropy(self):
        ent = np.full((2, 2), 0.1)
        mi = np.full((2, 2), 0.2)
        with pytest.raises(DomainError):
            UncertaintyMaps(entropy=ent, mutual_information=mi)

    def test_rejects_negative_mi(self):
        ent = np.full((2, 2), 0.1)
        mi = np.full((2, 2), -0.01)
        with pytest.raises(DomainError):
            UncertaintyMaps(entropy=ent, mutual_information=mi)

    def test_rejects_shape_mismatch(self):
        with pytest.raises(DomainError):
            UncertaintyMaps(entropy=np.zeros((2, 2)), mutual_information=np.zeros((2, 3)))


class TestSummarize:
    def test_constant_field(self):
        ent = np.full((4, 4), 0.25)
        mi = np.full((4, 4), 0.1)
        s = summarize_uncertainty(UncertaintyMaps(entropy=ent, mutual_information=mi))
        assert s.mean_entropy == s.min_entropy == s.max_entropy == 0.25
        assert s.std_entropy == 0.0
        assert s.mean_mi == 0.1 and s.std_mi == 0.0

    def test_two_pixel_hand_case(self):
        ent = np.array([[0.0, LN2]])
        mi = np.zeros((1, 2))
        s = summarize_uncertainty(UncertaintyMaps(entropy=ent, mutual_information=mi))
        assert s.mean_entropy == pytest.approx(0.3466, abs=1e-4)
        assert s.std_entropy == pytest.approx(0.3466, abs=1e-4)  # population std
        assert s.min_entropy == 0.0 and s.max_entropy == pytest.approx(LN2)

    def test_matches_two_pass_oracle(self, rng):
        stack = random_stack(rng, k=2, t=3, h=5, w=4)
        maps = mutual_information_map(stack)
        s = summarize_uncertainty(maps)
        ent = [float(v) for v in maps.entropy.ravel()]
        mi = [float(v) for v in maps.mutual_information.ravel()]
        assert s.mean_entropy == pytest.approx(oracle_mean(ent), abs=1e-12)
        assert s.std_entropy == pytest.approx(oracle_population_std(ent), abs=1e-12)
        assert s.mean_mi == pytest.approx(oracle_mean(mi), abs=1e-12)
        assert s.std_mi == pytest.approx(oracle_population_std(mi), abs=1e-12)
        assert s.min_entropy == min(ent) and s.max_entropy == max(ent)

    def test_scaled_and_json(self):
        s = UncertaintySummary(0.4, 0.0, 0.6, 0.1, 0.2, 0.0, 0.3, 0.05)
        b = s.scaled(1.0 / LN2)
        assert b.mean_entropy == pytest.approx(0.4 / LN2)
        d = s.to_json_dict()
        assert set(d) == set(UncertaintySummary.__dataclass_fields__)


def test_nats_to_bits():
    assert nats_to_bits(LN2) == pytest.approx(1.0)
    arr = np.array([0.0, LN2, LN2 / 2])
    assert np.allclose(nats_to_bits(arr), [0.0, 1.0, 0.5])
