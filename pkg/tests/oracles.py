"""Independent reference implementations used to cross-check the package.

Everything here is deliberately written the slow, obvious way in plain
Python (loops, sets, math.log) with none of the package's vectorized
shortcuts, so agreement between the two is meaningful evidence rather than
the same code tested against itself.
"""

from __future__ import annotations

import math
from typing import Iterable, Sequence

LN2 = math.log(2.0)


def oracle_entropy(p: float) -> float:
    """Binary Shannon entropy in nats with the 0*log(0) = 0 convention."""
    if p < 0.0 or p > 1.0:
        raise ValueError(f"probability out of range: {p}")
    total = 0.0
    for q in (p, 1.0 - p):
        if q > 0.0:
            total -= q * math.log(q)
    return total


def oracle_mean(values: Sequence[float]) -> float:
    return math.fsum(values) / len(values)


def oracle_mi(samples: Sequence[float]) -> float:
    """Disagreement term: entropy of the mean minus the mean entropy.

    Negative results (possible only through rounding) floor at zero.
    """
    mean = oracle_mean(samples)
    mean_entropy = oracle_mean([oracle_entropy(s) for s in samples])
    return max(0.0, oracle_entropy(mean) - mean_entropy)


def oracle_population_std(values: Sequence[float]) -> float:
    mean = oracle_mean(values)
    return math.sqrt(oracle_mean([(v - mean) ** 2 for v in values]))


def oracle_sample_std(values: Sequence[float]) -> float:
    if len(values) < 2:
        return 0.0
    mean = oracle_mean(values)
    var = math.fsum((v - mean) ** 2 for v in values) / (len(values) - 1)
    return math.sqrt(var)


def oracle_confidence(p: float) -> float:
    return max(p, 1.0 - p)


def oracle_ece(
    pixels: Iterable[tuple[float, bool]],
    bin_count: int = 30,
    range_low: float = 0.5,
    range_high: float = 1.0,
    threshold: float = 0.5,
) -> float:
    """ECE by linear-scan binning over (probability, truth) pixels.

    Bins are equal width over [range_low, range_high), the last bin closed
    on the right; confidences outside the range count toward the nearest
    end bin.
    """
    edges = [
        range_low + i * (range_high - range_low) / bin_count
        for i in range(bin_count + 1)
    ]
    counts = [0] * bin_count
    correct = [0] * bin_count
    conf_sums = [0.0] * bin_count
    n = 0
    for p, truth in pixels:
        n += 1
        conf = oracle_confidence(p)
        if conf < edges[0]:
            m = 0
        elif conf >= edges[-1]:
            m = bin_count - 1
        else:
            m = 0
            while not (edges[m] <= conf < edges[m + 1]):
                m += 1
        counts[m] += 1
        conf_sums[m] += conf
        if (p >= threshold) == truth:
            correct[m] += 1
    ece = 0.0
    for m in range(bin_count):
        if counts[m] == 0:
            continue
        acc = correct[m] / counts[m]
        conf = conf_sums[m] / counts[m]
        ece += (counts[m] / n) * abs(acc - conf)
    return ece


def oracle_dice(pred: set, truth: set) -> float:
    if not pred and not truth:
        return 1.0
    return 2.0 * len(pred & truth) / (len(pred) + len(truth))


def oracle_iou(pred: set, truth: set) -> float:
    union = pred | truth
    if not union:
        return 1.0
    return len(pred & truth) / len(union)


def mask_to_set(mask) -> set:
    """Foreground coordinates of a 2-d boolean array as a set of tuples."""
    coords = set()
    for r in range(mask.shape[0]):
        for c in range(mask.shape[1]):
            if mask[r, c]:
                coords.add((r, c))
    return coords
