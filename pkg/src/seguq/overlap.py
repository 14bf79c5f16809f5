"""Overlap metrics between predicted and ground-truth masks, and fold rollups."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .datamodel import BinaryMask, ProbabilityMap
from .errors import EmptyInputError, ShapeMismatchError
from .uncertainty import UncertaintySummary

CASES_SCHEMA_VERSION = 1
FOLDS_SCHEMA_VERSION = 1


def _overlap_counts(pred: BinaryMask, truth: BinaryMask) -> tuple[int, int, int]:
    if pred.values.shape != truth.values.shape:
        raise ShapeMismatchError(
            f"pred {pred.values.shape} vs truth {truth.values.shape}"
        )
    inter = int(np.count_nonzero(pred.values & truth.values))
    return inter, pred.foreground_count, truth.foreground_count


def dice(pred: BinaryMask, truth: BinaryMask) -> float:
    """2|P∩G| / (|P|+|G|); 1.0 when both masks are empty, 0.0 when only one is."""
    inter, p, g = _overlap_counts(pred, truth)
    if p + g == 0:
        return 1.0
    return 2.0 * inter / (p + g)


def iou(pred: BinaryMask, truth: BinaryMask) -> float:
    """|P∩G| / |P∪G|; same empty-mask convention as dice."""
    inter, p, g = _overlap_counts(pred, truth)
    union = p + g - inter
    if union == 0:
        return 1.0
    return inter / union


def pixel_accuracy(pred: BinaryMask, truth: BinaryMask) -> float:
    if pred.values.shape != truth.values.shape:
        raise ShapeMismatchError(
            f"pred {pred.values.shape} vs truth {truth.values.shape}"
        )
    return float(np.count_nonzero(pred.values == truth.values) / pred.values.size)


@dataclass(frozen=True)
class CaseEvaluation:
    """Overlap metrics for one case; uncertainty stats ride along if present."""

    case_id: str
    dice: float
    iou: float
    pixel_accuracy: float
    uncertainty: UncertaintySummary | None = None

    def to_json_dict(self) -> dict:
        d = {
            "case_id": self.case_id,
            "dice": self.dice,
            "iou": self.iou,
            "pixel_accuracy": self.pixel_accuracy,
        }
        if self.uncertainty is not None:
            d["uncertainty"] = self.uncertainty.to_json_dict()
        return d


def evaluate_case(
    mean: ProbabilityMap,
    truth: BinaryMask,
    threshold: float = 0.5,
    case_id: str = "",
    uncertainty: UncertaintySummary | None = None,
) -> CaseEvaluation:
    """Binarize the mean map at ``threshold`` and score it against the truth."""
    pred = BinaryMask(mean.values >= threshold)
    return CaseEvaluation(
        case_id=case_id,
        dice=dice(pred, truth),
        iou=iou(pred, truth),
        pixel_accuracy=pixel_accuracy(pred, truth),
        uncertainty=uncertainty,
    )


@dataclass(frozen=True)
class FoldAggregate:
    """Cross-validation rollup: per-fold means plus their mean and spread.

    ``std`` uses the sample (n-1) normalization to match the usual
    mean ± std reporting; a single fold gives std 0.
    """

    fold_means: tuple[float, ...]
    mean: float
    std: float

    def to_json_dict(self, fold_labels: Sequence[str] | None = None) -> dict:
        if fold_labels is None:
            folds = list(self.fold_means)
        else:
            folds = dict(zip(fold_labels, self.fold_means))
        return {
            "schema_version": FOLDS_SCHEMA_VERSION,
            "fold_means": folds,
            "overall_mean": self.mean,
            "overall_std": self.std,
        }


def aggregate_folds(fold_means: Sequence[float]) -> FoldAggregate:
    if len(fold_means) == 0:
        raise EmptyInputError("need at least one fold mean")
    values = [float(v) for v in fold_means]
    mean = math.fsum(values) / len(values)
    if len(values) == 1:
        std = 0.0
    else:
        var = math.fsum((v - mean) ** 2 for v in values) / (len(values) - 1)
        std = math.sqrt(var)
    return FoldAggregate(fold_means=tuple(values), mean=mean, std=std)


def write_cases_csv(cases: Sequence[CaseEvaluation], path: str | Path) -> None:
    with_unc = any(c.uncertainty is not None for c in cases)
    header = ["case_id", "dice", "iou", "pixel_accuracy"]
    if with_unc:
        header += list(UncertaintySummary.__dataclass_fields__)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for c in cases:
            row = [c.case_id, repr(c.dice), repr(c.iou), repr(c.pixel_accuracy)]
            if with_unc:
                if c.uncertainty is None:
                    row += [""] * 8
                else:
                    row += [
                        repr(getattr(c.uncertainty, f))
                        for f in UncertaintySummary.__dataclass_fields__
                    ]
            writer.writerow(row)


def write_cases_json(cases: Sequence[CaseEvaluation], path: str | Path) -> None:
    doc = {
        "schema_version": CASES_SCHEMA_VERSION,
        "cases": [c.to_json_dict() for c in cases],
    }
    Path(path).write_text(json.dumps(doc, indent=2) + "\n")


def read_cases_json(path: str | Path) -> list[CaseEvaluation]:
    doc = json.loads(Path(path).read_text())
    cases = []
    for c in doc["cases"]:
        unc = None
        if "uncertainty" in c:
            unc = UncertaintySummary(
                **{k: float(v) for k, v in c["uncertainty"].items()}
            )
        cases.append(
            CaseEvaluation(
                case_id=str(c["case_id"]),
                dice=float(c["dice"]),
                iou=float(c["iou"]),
                pixel_accuracy=float(c["pixel_accuracy"]),
                uncertainty=unc,
            )
        )
    return cases
