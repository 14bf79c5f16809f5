"""Expected calibration error over confidence bins, plus report pooling.

Pixels are binned by confidence max(p, 1-p), so confidence never drops
below 0.5 and the default bin range is [0.5, 1.0]. A pixel counts as
accurate when thresholding the mean probability reproduces the ground
truth. Reports store per-bin integer counts and confidence sums rather
than ratios, which makes pooling across cases an exact merge.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .datamodel import BinaryMask, ProbabilityMap
from .errors import (
    ConfigMismatchError,
    DomainError,
    EmptyInputError,
    ShapeMismatchError,
)

REPORT_SCHEMA_VERSION = 1


@dataclass(frozen=True)
class BinningConfig:
    """Equal-width confidence binning plus the decision threshold.

    Bins are half-open [low, high) except the last, which includes its
    upper edge so confidence 1.0 lands in a bin. Values outside
    [range_low, range_high] (possible only with a narrowed range) are
    assigned to the nearest end bin.
    """

    bin_count: int = 30
    range_low: float = 0.5
    range_high: float = 1.0
    threshold: float = 0.5

    def __post_init__(self) -> None:
        if self.bin_count < 1:
            raise DomainError(f"bin_count must be >= 1, got {self.bin_count}")
        if not 0.0 <= self.range_low < self.range_high <= 1.0:
            raise DomainError(
                f"need 0 <= range_low < range_high <= 1, "
                f"got [{self.range_low}, {self.range_high}]"
            )
        if not 0.0 <= self.threshold <= 1.0:
            raise DomainError(f"threshold {self.threshold!r} outside [0, 1]")

    def edges(self) -> np.ndarray:
        return np.linspace(self.range_low, self.range_high, self.bin_count + 1)

    def to_json_dict(self) -> dict:
        return {
            "bin_count": self.bin_count,
            "range_low": self.range_low,
            "range_high": self.range_high,
            "threshold": self.threshold,
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "BinningConfig":
        return cls(
            bin_count=int(d["bin_count"]),
            range_low=float(d["range_low"]),
            range_high=float(d["range_high"]),
            threshold=float(d["threshold"]),
        )


@dataclass(frozen=True)
class CalibrationBin:
    low: float
    high: float
    count: int
    correct: int
    confidence_sum: float

    @property
    def accuracy(self) -> float | None:
        return self.correct / self.count if self.count else None

    @property
    def confidence(self) -> float | None:
        return self.confidence_sum / self.count if self.count else None

    @property
    def mid(self) -> float:
        return 0.5 * (self.low + self.high)


@dataclass(frozen=True)
class CalibrationReport:
    """Per-bin tallies plus whole-image counters for one or many cases."""

    config: BinningConfig
    bins: tuple[CalibrationBin, ...]
    total_pixels: int
    foreground_pixels: int
    correct_pixels: int

    def __post_init__(self) -> None:
        if len(self.bins) != self.config.bin_count:
            raise ConfigMismatchError(
                f"report has {len(self.bins)} bins, config says {self.config.bin_count}"
            )
        if sum(b.count for b in self.bins) != self.total_pixels:
            raise ConfigMismatchError("bin counts do not sum to total_pixels")

    @property
    def ece(self) -> float:
        """Count-weighted mean absolute confidence/accuracy gap; empty bins
        contribute nothing."""
        if self.total_pixels == 0:
            return 0.0
        total = 0.0
        for b in self.bins:
            if b.count:
                total += (b.count / self.total_pixels) * abs(
                    b.accuracy - b.confidence
                )
        return total

    @property
    def pixel_accuracy(self) -> float:
        return self.correct_pixels / self.total_pixels if self.total_pixels else 0.0


def confidence_map(mean: ProbabilityMap) -> np.ndarray:
    """Per-pixel confidence max(p, 1-p), an H×W field in [0.5, 1]."""
    return np.maximum(mean.values, 1.0 - mean.values)


def _bin_indices(conf: np.ndarray, cfg: BinningConfig) -> np.ndarray:
    scale = cfg.bin_count / (cfg.range_high - cfg.range_low)
    idx = np.floor((conf - cfg.range_low) * scale).astype(np.int64)
    return np.clip(idx, 0, cfg.bin_count - 1)


def compute_ece(
    mean: ProbabilityMap, truth: BinaryMask, cfg: BinningConfig | None = None
) -> CalibrationReport:
    """Bin every pixel of one case and tally accuracy and confidence.

    The prediction is mean >= threshold; a pixel is accurate when that
    matches the truth mask.
    """
    cfg = cfg or BinningConfig()
    if mean.values.shape != truth.values.shape:
        raise ShapeMismatchError(
            f"map {mean.values.shape} vs mask {truth.values.shape}"
        )
    p = mean.values.ravel()
    conf = np.maximum(p, 1.0 - p)
    predicted = p >= cfg.threshold
    correct = predicted == truth.values.ravel()

    idx = _bin_indices(conf, cfg)
    counts = np.bincount(idx, minlength=cfg.bin_count)
    correct_counts = np.bincount(idx, weights=correct, minlength=cfg.bin_count)
    conf_sums = np.bincount(idx, weights=conf, minlength=cfg.bin_count)

    edges = cfg.edges()
    bins = tuple(
        CalibrationBin(
            low=float(edges[m]),
            high=float(edges[m + 1]),
            count=int(counts[m]),
            correct=int(round(correct_counts[m])),
            confidence_sum=float(conf_sums[m]),
        )
        for m in range(cfg.bin_count)
    )
    return CalibrationReport(
        config=cfg,
        bins=bins,
        total_pixels=int(p.size),
        foreground_pixels=truth.foreground_count,
        correct_pixels=int(np.count_nonzero(correct)),
    )


def pool_calibration(reports: Sequence[CalibrationReport]) -> CalibrationReport:
    """Merge per-case reports bin by bin; an associative, commutative reduce.

    All inputs must share the same BinningConfig. Counts and correct tallies
    add exactly; confidence sums add in float64.
    """
    if not reports:
        raise EmptyInputError("nothing to pool")
    cfg = reports[0].config
    for r in reports[1:]:
        if r.config != cfg:
            raise ConfigMismatchError(
                f"cannot pool reports with configs {r.config} and {cfg}"
            )
    bins = []
    for m in range(cfg.bin_count):
        parts = [r.bins[m] for r in reports]
        bins.append(
            CalibrationBin(
                low=parts[0].low,
                high=parts[0].high,
                count=sum(b.count for b in parts),
                correct=sum(b.correct for b in parts),
                confidence_sum=float(sum(b.confidence_sum for b in parts)),
            )
        )
    return CalibrationReport(
        config=cfg,
        bins=tuple(bins),
        total_pixels=sum(r.total_pixels for r in reports),
        foreground_pixels=sum(r.foreground_pixels for r in reports),
        correct_pixels=sum(r.correct_pixels for r in reports),
    )


def report_to_json_dict(report: CalibrationReport, label: str) -> dict:
    return {
        "schema_version": REPORT_SCHEMA_VERSION,
        "label": label,
        "binning": report.config.to_json_dict(),
        "total_pixels": report.total_pixels,
        "foreground_pixels": report.foreground_pixels,
        "correct_pixels": report.correct_pixels,
        "pixel_accuracy": report.pixel_accuracy,
        "ece": report.ece,
        "bins": [
            {
                "low": b.low,
                "high": b.high,
                "count": b.count,
                "correct": b.correct,
                "confidence_sum": b.confidence_sum,
                "accuracy": b.accuracy,
                "confidence": b.confidence,
            }
            for b in report.bins
        ],
    }


def report_from_json_dict(d: dict) -> CalibrationReport:
    cfg = BinningConfig.from_json_dict(d["binning"])
    bins = tuple(
        CalibrationBin(
            low=float(b["low"]),
            high=float(b["high"]),
            count=int(b["count"]),
            correct=int(b["correct"]),
            confidence_sum=float(b["confidence_sum"]),
        )
        for b in d["bins"]
    )
    return CalibrationReport(
        config=cfg,
        bins=bins,
        total_pixels=int(d["total_pixels"]),
        foreground_pixels=int(d["foreground_pixels"]),
        correct_pixels=int(d["correct_pixels"]),
    )


def write_reliability_csv(report: CalibrationReport, path: str | Path) -> None:
    """Plot-ready reliability diagram data: bin_mid, conf, acc, count."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["bin_mid", "conf", "acc", "count"])
        for b in report.bins:
            writer.writerow(
                [
                    repr(b.mid),
                    "" if b.confidence is None else repr(b.confidence),
                    "" if b.accuracy is None else repr(b.accuracy),
                    b.count,
                ]
            )


def write_report_json(
    pooled: CalibrationReport,
    per_case: dict[str, CalibrationReport],
    path: str | Path,
) -> None:
    doc = {
        "schema_version": REPORT_SCHEMA_VERSION,
        "pooled": report_to_json_dict(pooled, label="pooled"),
        "per_case": {
            case: report_to_json_dict(rep, label=f"case:{case}")
            for case, rep in sorted(per_case.items())
        },
    }
    Path(path).write_text(json.dumps(doc, indent=2) + "\n")
