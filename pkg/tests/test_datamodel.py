import numpy as np
import pytest

from seguq.datamodel import (
    LN2,
    BinaryMask,
    PerPassEntropyStack,
    ProbabilityMap,
    SampleStack,
)
from seguq.errors import DimensionOverflowError, ValueOutOfRangeError


class TestSampleStack:
    def test_shape_properties(self):
        stack = SampleStack(np.zeros((2, 3, 4, 5), dtype=np.float32), case_id="c1")
        assert (stack.k, stack.t, stack.height, stack.width) == (2, 3, 4, 5)
        assert stack.sample_count == 6
        assert stack.case_id == "c1"

    def test_samples_view_is_flat(self):
        values = np.arange(24, dtype=np.float32).reshape(2, 3, 2, 2) / 24.0
        stack = SampleStack(values)
        flat = stack.samples()
        assert flat.shape == (6, 2, 2)
        assert np.array_equal(flat[4], values[1, 1])

    def test_rejects_out_of_range_with_index(self):
        values = np.zeros((1, 1, 2, 3), dtype=np.float32)
        values[0, 0, 1, 2] = 1.5
        with pytest.raises(ValueOutOfRangeError, match=r"\(0, 0, 1, 2\)"):
            SampleStack(values)

    def test_rejects_nan(self):
        values = np.zeros((1, 1, 1, 2), dtype=np.float32)
        values[0, 0, 0, 1] = np.nan
        with pytest.raises(ValueOutOfRangeError):
            SampleStack(values)

    def test_rejects_negative(self):
        with pytest.raises(ValueOutOfRangeError):
            SampleStack(np.full((1, 1, 1, 1), -0.25, dtype=np.float32))

    @pytest.mark.parametrize("shape", [(2, 3), (1, 1, 1), (1, 1, 1, 1, 1), (0, 1, 1, 1)])
    def test_rejects_bad_shapes(self, shape):
        with pytest.raises(DimensionOverflowError):
            SampleStack(np.zeros(shape, dtype=np.float32))

    def test_immutable_after_construction(self):
        stack = SampleStack(np.zeros((1, 1, 2, 2), dtype=np.float32))
        with pytest.raises(ValueError):
            stack.values[0, 0, 0, 0] = 0.5

    def test_boundary_values_accepted(self):
        values = np.array([0.0, 1.0, 0.5, 1.0], dtype=np.float32).reshape(1, 1, 2, 2)
        stack = SampleStack(values)
        assert stack.values.max() == 1.0


class TestProbabilityMap:
    def test_accepts_and_freezes(self):
        pmap = ProbabilityMap(np.full((2, 2), 0.25))
        assert pmap.height == pmap.width == 2
        with pytest.raises(ValueError):
            pmap.values[0, 0] = 0.9

    def test_rejects_out_of_range(self):
        with pytest.raises(ValueOutOfRangeError, match=r"\(0, 1\)"):
            ProbabilityMap(np.array([[0.5, 1.0001]]))

    def test_rejects_wrong_rank(self):
        with pytest.raises(DimensionOverflowError):
            ProbabilityMap(np.zeros(3))


class TestBinaryMask:
    def test_coerces_to_bool(self):
        mask = BinaryMask(np.array([[0, 1], [2, 0]]))
        assert mask.values.dtype == np.bool_
        assert mask.foreground_count == 2

    def test_rejects_wrong_rank(self):
        with pytest.raises(DimensionOverflowError):
            BinaryMask(np.zeros((1, 1, 1), dtype=bool))


class TestPerPassEntropyStack:
    def test_accepts_upper_bound_with_epsilon(self):
        values = np.full((1, 1, 1, 1), LN2 + 5e-13)
        PerPassEntropyStack(values)

    def test_rejects_above_ln2(self):
        with pytest.raises(ValueOutOfRangeError):
            PerPassEntropyStack(np.full((1, 1, 1, 1), LN2 + 1e-9))

    def test_rejects_negative(self):
        with pytest.raises(ValueOutOfRangeError):
            PerPassEntropyStack(np.full((1, 1, 1, 1), -1e-9))
