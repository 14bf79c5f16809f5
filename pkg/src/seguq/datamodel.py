"""Core raster types: prediction stacks, probability maps and binary masks.

All types validate on construction and are immutable afterwards, so they can
be shared freely across threads. Probabilities are stored as float32 (the
on-disk precision); anything derived from them is accumulated in float64.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionOverflowError, ValueOutOfRangeError

LN2 = math.log(2.0)

# Hard cap on element count per stack; keeps corrupted headers from
# triggering absurd allocations.
MAX_ELEMENTS = 2**40


def _check_unit_range(values: np.ndarray, what: str) -> None:
    ok = (values >= 0.0) & (values <= 1.0)
    if not ok.all():
        flat = np.argmax(~ok.ravel())
        idx = np.unravel_index(flat, values.shape)
        raise ValueOutOfRangeError(
            f"{what} value {values[idx]!r} at index {tuple(int(i) for i in idx)} "
            f"is outside [0, 1]"
        )


def _frozen(values: np.ndarray) -> np.ndarray:
    values.setflags(write=False)
    return values


@dataclass(frozen=True)
class SampleStack:
    """K×T×H×W stack of per-pass foreground probabilities for one case.

    K indexes ensemble members, T stochastic passes per member. Values are
    float32 in [0, 1]; construction rejects anything outside that range
    (first offending index is reported, nothing is clamped).
    """

    values: np.ndarray
    case_id: str = ""

    def __post_init__(self) -> None:
        arr = np.asarray(self.values, dtype=np.float32)
        if arr.ndim != 4:
            raise DimensionOverflowError(
                f"stack must be 4-dimensional (K, T, H, W), got shape {arr.shape}"
            )
        if min(arr.shape) < 1 or arr.size > MAX_ELEMENTS:
            raise DimensionOverflowError(f"unsupported stack shape {arr.shape}")
        _check_unit_range(arr, "stack")
        object.__setattr__(self, "values", _frozen(arr))

    @property
    def k(self) -> int:
        return self.values.shape[0]

    @property
    def t(self) -> int:
        return self.values.shape[1]

    @property
    def height(self) -> int:
        return self.values.shape[2]

    @property
    def width(self) -> int:
        return self.values.shape[3]

    @property
    def sample_count(self) -> int:
        return self.k * self.t

    def samples(self) -> np.ndarray:
        """All K·T slices as one (K·T, H, W) view."""
        return self.values.reshape(self.sample_count, self.height, self.width)


@dataclass(frozen=True)
class ProbabilityMap:
    """H×W field of foreground probabilities, float64 in [0, 1]."""

    values: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.values, dtype=np.float64)
        if arr.ndim != 2 or min(arr.shape) < 1:
            raise DimensionOverflowError(
                f"probability map must be 2-dimensional, got shape {arr.shape}"
            )
        _check_unit_range(arr, "probability map")
        object.__setattr__(self, "values", _frozen(arr))

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class BinaryMask:
    """H×W boolean field; True marks foreground."""

    values: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.values)
        if arr.dtype != np.bool_:
            arr = arr.astype(bool)
        if arr.ndim != 2 or min(arr.shape) < 1:
            raise DimensionOverflowError(
                f"mask must be 2-dimensional, got shape {arr.shape}"
            )
        object.__setattr__(self, "values", _frozen(arr))

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def foreground_count(self) -> int:
        return int(np.count_nonzero(self.values))


@dataclass(frozen=True)
class PerPassEntropyStack:
    """K×T×H×W stack of per-pass binary entropies, in nats.

    Each value lies in [0, ln 2]; a small epsilon absorbs float rounding at
    the upper bound.
    """

    values: np.ndarray
    _EPS: float = field(default=1e-12, init=False, repr=False)

    def __post_init__(self) -> None:
        arr = np.asarray(self.values, dtype=np.float64)
        if arr.ndim != 4 or min(arr.shape) < 1:
            raise DimensionOverflowError(
                f"entropy stack must be 4-dimensional, got shape {arr.shape}"
            )
        ok = (arr >= 0.0) & (arr <= LN2 + self._EPS)
        if not ok.all():
            flat = np.argmax(~ok.ravel())
            idx = np.unravel_index(flat, arr.shape)
            raise ValueOutOfRangeError(
                f"entropy value {arr[idx]!r} at index {tuple(int(i) for i in idx)} "
                f"is outside [0, ln 2]"
            )
        object.__setattr__(self, "values", _frozen(arr))

    @property
    def k(self) -> int:
        return self.values.shape[0]

    @property
    def t(self) -> int:
        return self.values.shape[1]
