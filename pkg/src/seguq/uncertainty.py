"""Per-pixel predictive entropy and mutual information, plus case summaries.

Entropy here is the binary Shannon entropy of the mean foreground
probability, in nats (so it peaks at ln 2 for a 50/50 pixel). Mutual
information is that entropy minus the mean of the per-sample entropies;
it vanishes where all samples agree and grows with sample disagreement,
which makes it the epistemic part of the total uncertainty.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import xlogy

from .datamodel import LN2, PerPassEntropyStack, ProbabilityMap, SampleStack
from .errors import DomainError

_BOUND_EPS = 1e-12


def binary_entropy(p: float) -> float:
    """Binary Shannon entropy of a probability, in nats.

    Uses the continuous extension 0*log(0) = 0, so the saturated inputs
    0 and 1 give exactly 0. Raises DomainError outside [0, 1].
    """
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"probability {p!r} outside [0, 1]")
    return float(-(xlogy(p, p) + xlogy(1.0 - p, 1.0 - p)))


def _entropy_field(p: np.ndarray) -> np.ndarray:
    return -(xlogy(p, p) + xlogy(1.0 - p, 1.0 - p))


def entropy_map(mean: ProbabilityMap) -> np.ndarray:
    """Pixel-wise binary entropy of a mean map, as an H×W float64 field."""
    return _entropy_field(mean.values)


def per_pass_entropies(stack: SampleStack) -> PerPassEntropyStack:
    """Binary entropy of every individual sample, keeping the K×T layout."""
    return PerPassEntropyStack(_entropy_field(stack.values.astype(np.float64)))


@dataclass(frozen=True)
class UncertaintyMaps:
    """Paired H×W entropy and mutual-information fields, in nats.

    At every pixel 0 <= mi <= entropy <= ln 2 (up to float rounding).
    """

    entropy: np.ndarray
    mutual_information: np.ndarray

    def __post_init__(self) -> None:
        ent = np.asarray(self.entropy, dtype=np.float64)
        mi = np.asarray(self.mutual_information, dtype=np.float64)
        if ent.shape != mi.shape or ent.ndim != 2:
            raise DomainError(
                f"entropy and MI fields must share a 2-d shape, "
                f"got {ent.shape} and {mi.shape}"
            )
        bad = (
            (mi < 0.0)
            | (mi > ent + _BOUND_EPS)
            | (ent < 0.0)
            | (ent > LN2 + _BOUND_EPS)
        )
        if bad.any():
            idx = np.unravel_index(np.argmax(bad.ravel()), ent.shape)
            raise DomainError(
                f"uncertainty bounds violated at {tuple(int(i) for i in idx)}: "
                f"entropy={ent[idx]!r}, mi={mi[idx]!r}"
            )
        for arr in (ent, mi):
            arr.setflags(write=False)
        object.__setattr__(self, "entropy", ent)
        object.__setattr__(self, "mutual_information", mi)


def mutual_information_map(stack: SampleStack) -> UncertaintyMaps:
    """Entropy of the mean and its epistemic component for one stack.

    Both the mean probability and the mean per-sample entropy run over all
    K*T samples. MI is floored at 0 (cancellation can leave tiny negatives)
    and capped at the entropy.
    """
    samples = stack.samples()
    n = samples.shape[0]
    first = samples[0].astype(np.float64)
    first_ent = _entropy_field(first)
    # Sums are centred on the first sample so that pixels where every
    # sample agrees come out with an exactly zero MI.
    dev_sum = np.zeros_like(first)
    ent_dev_sum = np.zeros_like(first)
    for i in range(1, n):
        s = samples[i].astype(np.float64)
        dev_sum += s - first
        ent_dev_sum += _entropy_field(s) - first_ent
    mean = np.clip(first + dev_sum / n, 0.0, 1.0)
    mean_sample_entropy = first_ent + ent_dev_sum / n
    entropy = _entropy_field(mean)
    mi = np.clip(entropy - mean_sample_entropy, 0.0, None)
    np.minimum(mi, entropy, out=mi)
    return UncertaintyMaps(entropy=entropy, mutual_information=mi)


@dataclass(frozen=True)
class UncertaintySummary:
    """Whole-case statistics of the two uncertainty fields, in nats.

    ``std`` is the population standard deviation; with pixel counts in the
    millions the sample/population distinction is immaterial, but fixing it
    keeps results reproducible.
    """

    mean_entropy: float
    min_entropy: float
    max_entropy: float
    std_entropy: float
    mean_mi: float
    min_mi: float
    max_mi: float
    std_mi: float

    def scaled(self, factor: float) -> "UncertaintySummary":
        return UncertaintySummary(
            *(getattr(self, f) * factor for f in self.__dataclass_fields__)
        )

    def to_json_dict(self) -> dict:
        return {f: float(getattr(self, f)) for f in self.__dataclass_fields__}


def summarize_uncertainty(maps: UncertaintyMaps) -> UncertaintySummary:
    ent, mi = maps.entropy, maps.mutual_information
    return UncertaintySummary(
        mean_entropy=float(np.mean(ent)),
        min_entropy=float(np.min(ent)),
        max_entropy=float(np.max(ent)),
        std_entropy=float(np.std(ent)),
        mean_mi=float(np.mean(mi)),
        min_mi=float(np.min(mi)),
        max_mi=float(np.max(mi)),
        std_mi=float(np.std(mi)),
    )


def nats_to_bits(x: np.ndarray | float):
    """Rescale nats to bits (divide by ln 2); display convenience only."""
    return x / LN2
