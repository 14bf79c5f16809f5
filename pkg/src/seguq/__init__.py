"""Uncertainty, calibration and overlap analysis for stochastic segmentation.

The toolkit consumes stacks of per-pass foreground-probability maps (K
ensemble members x T stochastic passes), aggregates them into mean
predictions, derives per-pixel entropy and mutual-information maps, scores
calibration (ECE, reliability data) and overlap (Dice, IoU, pixel
accuracy), audits datasets for duplicated images, and generates synthetic
calibrated/miscalibrated stacks for testing. See the `seguq` CLI for the
file-level pipeline.
"""

from .aggregate import AggregationMode, aggregate_mean, per_sample_slice
from .calibration import (
    BinningConfig,
    CalibrationBin,
    CalibrationReport,
    compute_ece,
    confidence_map,
    pool_calibration,
)
from .datamodel import (
    LN2,
    BinaryMask,
    PerPassEntropyStack,
    ProbabilityMap,
    SampleStack,
)
from .dedup import (
    DatasetIndex,
    DedupStrategy,
    DuplicateGroup,
    apply_strategy,
    audit_report,
    find_duplicates,
    index_dataset,
)
from .errors import ToolkitError
from .fileio import (
    read_mask,
    read_probability_map,
    read_sample_stack,
    write_mask_pgm,
    write_probability_map,
    write_sample_stack,
)
from .manifest import tool_version
from .overlap import (
    CaseEvaluation,
    FoldAggregate,
    aggregate_folds,
    dice,
    evaluate_case,
    iou,
    pixel_accuracy,
)
from .synthgen import Regime, SynthSpec, generate
from .uncertainty import (
    UncertaintyMaps,
    UncertaintySummary,
    binary_entropy,
    entropy_map,
    mutual_information_map,
    summarize_uncertainty,
)

__version__ = tool_version()

__all__ = [
    "AggregationMode",
    "BinaryMask",
    "BinningConfig",
    "CalibrationBin",
    "CalibrationReport",
    "CaseEvaluation",
    "DatasetIndex",
    "DedupStrategy",
    "DuplicateGroup",
    "FoldAggregate",
    "LN2",
    "PerPassEntropyStack",
    "ProbabilityMap",
    "Regime",
    "SampleStack",
    "SynthSpec",
    "ToolkitError",
    "UncertaintyMaps",
    "UncertaintySummary",
    "aggregate_folds",
    "aggregate_mean",
    "apply_strategy",
    "audit_report",
    "binary_entropy",
    "compute_ece",
    "confidence_map",
    "dice",
    "entropy_map",
    "evaluate_case",
    "find_duplicates",
    "generate",
    "index_dataset",
    "iou",
    "mutual_information_map",
    "per_sample_slice",
    "pixel_accuracy",
    "pool_calibration",
    "read_mask",
    "read_probability_map",
    "read_sample_stack",
    "summarize_uncertainty",
    "write_mask_pgm",
    "write_probability_map",
    "write_sample_stack",
]
