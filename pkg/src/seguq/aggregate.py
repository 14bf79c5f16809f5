"""Averaging of stochastic prediction stacks into a single mean map.

Three regimes are supported: dropout sampling from a single model (K=1),
an ensemble of independently trained models (T=1), and the combined case
where every ensemble member contributes T stochastic passes. Because
stacks are rectangular (equal T for every member), the nested mean over
members and passes collapses to a flat mean over all K*T samples.
"""

from __future__ import annotations

import enum

import numpy as np

from .datamodel import ProbabilityMap, SampleStack
from .errors import IndexOutOfRangeError, ModeShapeMismatchError


class AggregationMode(enum.Enum):
    MC_DROPOUT = "mc"
    DEEP_ENSEMBLE = "ensemble"
    COMBINED = "combined"


def _check_mode(stack: SampleStack, mode: AggregationMode) -> None:
    if mode is AggregationMode.MC_DROPOUT and stack.k != 1:
        raise ModeShapeMismatchError(
            f"mc mode expects a single model (K=1), stack has K={stack.k}"
        )
    if mode is AggregationMode.DEEP_ENSEMBLE and stack.t != 1:
        raise ModeShapeMismatchError(
            f"ensemble mode expects one pass per member (T=1), stack has T={stack.t}"
        )


def aggregate_mean(stack: SampleStack, mode: AggregationMode) -> ProbabilityMap:
    """Pixel-wise arithmetic mean over all K*T samples.

    Accumulates in float64. Raises ModeShapeMismatchError when the mode is
    incompatible with the stack shape (e.g. mc with K=2).
    """
    _check_mode(stack, mode)
    mean = np.mean(stack.samples(), axis=0, dtype=np.float64)
    # float64 accumulation cannot push a [0,1] mean measurably outside the
    # interval; the clip guards the type invariant against ulp rounding.
    return ProbabilityMap(np.clip(mean, 0.0, 1.0))


def per_sample_slice(stack: SampleStack, k_index: int, t_index: int) -> ProbabilityMap:
    """The H×W slice for ensemble member ``k_index``, pass ``t_index``."""
    if not (0 <= k_index < stack.k and 0 <= t_index < stack.t):
        raise IndexOutOfRangeError(
            f"slice ({k_index}, {t_index}) out of range for K={stack.k}, T={stack.t}"
        )
    return ProbabilityMap(stack.values[k_index, t_index].astype(np.float64))
