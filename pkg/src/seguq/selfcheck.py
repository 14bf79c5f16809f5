"""Built-in golden fixture suite, exposed as the `seguq selfcheck` subcommand.

Each fixture drives the CLI end to end in a temporary directory and compares
the outputs against expectations that were fixed independently of this code:
hand-computed constants, a reference fold table, planted duplicate trees,
and statistical bounds that hold by construction of the synthetic generator.
A fixture reports its first divergence with expected and actual values.

The suite is hermetic: no network, no external data. Checked-in inputs live
under ``seguq/fixtures``; everything else is rebuilt per run from literal
values or generated deterministically.
"""

from __future__ import annotations

import contextlib
import io
import json
import math
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from . import cli
from .datamodel import LN2, SampleStack
from .errors import InvalidSpecError
from .fileio import read_float32_raw, read_sample_stack, write_sample_stack

FIXTURE_ROOT = Path(__file__).parent / "fixtures"


@dataclass(frozen=True)
class FixtureResult:
    name: str
    passed: bool
    detail: str = ""


@dataclass(frozen=True)
class GoldenFixture:
    """One named scenario: inputs, a CLI run, and a tolerance-checked output."""

    name: str
    origin: str  # where the expected values come from
    expectation: str  # human-readable statement of what must hold
    tolerance: float
    run: Callable[[Path], str]  # returns "" on success, else the divergence


def _cli(*argv: object) -> int:
    return cli.main([str(a) for a in argv])


def _diverge(label: str, expected: float, actual: float, tol: float) -> str:
    if math.isfinite(actual) and abs(actual - expected) <= tol:
        return ""
    return f"{label}: expected {expected!r} +/- {tol:g}, got {actual!r}"


def _fx_entropy_ceiling(work: Path) -> str:
    stack = SampleStack(np.full((1, 1, 8, 8), 0.5, dtype=np.float32), case_id="half")
    src = work / "half.pmap"
    write_sample_stack(stack, src)
    summary = work / "summary.json"
    rc = _cli("uncertainty", "--input", src, "--summary-out", summary)
    if rc != 0:
        return f"uncertainty exited {rc}"
    doc = json.loads(summary.read_text())
    for key in ("mean_entropy", "min_entropy", "max_entropy"):
        msg = _diverge(key, LN2, doc[key], 1e-6)
        if msg:
            return msg
    return _diverge("mean_mi", 0.0, doc["mean_mi"], 1e-12)


def _fx_hand_mi(work: Path) -> str:
    values = np.array([0.2, 0.8], dtype=np.float32).reshape(2, 1, 1, 1)
    src = work / "pair.pmap"
    write_sample_stack(SampleStack(values, case_id="pair"), src)
    summary = work / "summary.json"
    rc = _cli("uncertainty", "--input", src, "--summary-out", summary)
    if rc != 0:
        return f"uncertainty exited {rc}"
    doc = json.loads(summary.read_text())
    msg = _diverge("mean_mi", 0.192745, doc["mean_mi"], 1e-4)
    if msg:
        return msg
    return _diverge("mean_entropy", LN2, doc["mean_entropy"], 1e-4)


def _fx_ece_hand(work: Path) -> str:
    report = work / "report.json"
    rc = _cli(
        "calibrate",
        "--pred-dir", FIXTURE_ROOT / "ece_hand" / "pred",
        "--gt-dir", FIXTURE_ROOT / "ece_hand" / "gt",
        "--out", report,
    )
    if rc != 0:
        return f"calibrate exited {rc}"
    pooled = json.loads(report.read_text())["pooled"]
    msg = _diverge("ece", 0.08, pooled["ece"], 1e-4)
    if msg:
        return msg
    if pooled["total_pixels"] != 10:
        return f"total_pixels: expected 10, got {pooled['total_pixels']}"
    return ""


_FOLD_TABLES = {
    "busi_full": 0.7514,
    "busi_a1": 0.7144,
    "busi_a2": 0.7179,
    "busi_a3": 0.7211,
}


def _fx_fold_averages(work: Path) -> str:
    for name, expected in _FOLD_TABLES.items():
        out = work / f"{name}.json"
        rc = _cli(
            "report",
            "--folds", FIXTURE_ROOT / "folds" / f"{name}.json",
            "--out", out,
        )
        if rc != 0:
            return f"report exited {rc} for {name}"
        actual = json.loads(out.read_text())["overall_mean"]
        msg = _diverge(f"{name} mean", expected, actual, 5e-4)
        if msg:
            return msg
    return ""


def _run_calibration(work: Path, tag: str, regime: str, seed: int) -> float | str:
    pred = work / tag / "pred"
    gt = work / tag / "gt"
    pred.mkdir(parents=True)
    gt.mkdir(parents=True)
    rc = _cli(
        "synth",
        "--pixels", 1_000_000,
        "--seed", seed,
        "--regime", regime,
        "--out", pred / "case.pmap",
        "--mask-out", gt / "case.pgm",
    )
    if rc != 0:
        return f"synth exited {rc} for {tag}"
    report = work / tag / "report.json"
    rc = _cli("calibrate", "--pred-dir", pred, "--gt-dir", gt, "--out", report)
    if rc != 0:
        return f"calibrate exited {rc} for {tag}"
    return float(json.loads(report.read_text())["pooled"]["ece"])


def _fx_calibration_oracle(work: Path) -> str:
    seed = 20240811
    calibrated = _run_calibration(work, "cal", "calibrated", seed)
    if isinstance(calibrated, str):
        return calibrated
    overconfident = _run_calibration(work, "over", "overconfident", seed)
    if isinstance(overconfident, str):
        return overconfident
    if not calibrated < 0.01:
        return f"calibrated ECE: expected < 0.01, got {calibrated!r}"
    if not overconfident > calibrated:
        return (
            f"ordering: overconfident ECE {overconfident!r} not above "
            f"calibrated {calibrated!r}"
        )
    return ""


def _fx_pmap_roundtrip(work: Path) -> str:
    first = work / "one.pmap"
    rc = _cli(
        "synth",
        "--height", 19, "--width", 23,
        "--k", 2, "--t", 3,
        "--seed", 7,
        "--noise", "0.1",
        "--out", first,
    )
    if rc != 0:
        return f"synth exited {rc}"
    stack = read_sample_stack(first)
    second = work / "two.pmap"
    write_sample_stack(stack, second)
    if first.read_bytes() != second.read_bytes():
        return "write-read-write changed the file bytes"
    mean_out = work / "mean.f32"
    rc = _cli("aggregate", "--input", first, "--out", mean_out)
    if rc != 0:
        return f"aggregate exited {rc}"
    from .aggregate import AggregationMode, aggregate_mean

    expected = aggregate_mean(stack, AggregationMode.COMBINED).values.astype(np.float32)
    actual = read_float32_raw(mean_out)
    if not np.array_equal(expected, actual):
        return "CLI mean map differs from the library mean"
    return ""


_TREE_GROUPS = [
    ("benign_001.png", "benign_001_copy.png"),
    ("malignant_007.png", "malignant_007_dup.pgm"),
    ("normal_003.png", "normal_003_shift.png"),
]
_TREE_SOLOS = ["solo_101.png", "solo_202.png"]


def _fx_dedup_planted(work: Path) -> str:
    tree = FIXTURE_ROOT / "dedup_tree"
    all_images = sorted(
        [m for pair in _TREE_GROUPS for m in pair] + _TREE_SOLOS
    )
    expected_kept = {
        "a1": sorted(set(all_images) - {first for first, _ in _TREE_GROUPS}),
        "a2": sorted(set(all_images) - {second for _, second in _TREE_GROUPS}),
    }
    for strategy, expected in expected_kept.items():
        report = work / f"{strategy}.json"
        kept_list = work / f"{strategy}.txt"
        rc = _cli(
            "dedup",
            "--dir", tree,
            "--strategy", strategy,
            "--report", report,
            "--manifest", kept_list,
        )
        if rc != 0:
            return f"dedup exited {rc} for {strategy}"
        kept = kept_list.read_text().splitlines()
        if kept != expected:
            return f"{strategy} kept {kept}, expected {expected}"
        doc = json.loads(report.read_text())
        if doc["duplicate_group_count"] != len(_TREE_GROUPS):
            return (
                f"expected {len(_TREE_GROUPS)} groups, "
                f"got {doc['duplicate_group_count']}"
            )
    # Preferred-member strategy: keep a hand-picked member per group.
    prefer = {
        "benign_001.png": "benign_001.png",
        "malignant_007.png": "malignant_007_dup.pgm",
        "normal_003.png": "normal_003.png",
    }
    prefs_csv = work / "prefs.csv"
    prefs_csv.write_text(
        "group_id,keep_path\n"
        + "".join(f"{gid},{keep}\n" for gid, keep in prefer.items())
    )
    kept_list = work / "a3.txt"
    rc = _cli(
        "dedup",
        "--dir", tree,
        "--strategy", "a3",
        "--prefs", prefs_csv,
        "--manifest", kept_list,
    )
    if rc != 0:
        return f"dedup exited {rc} for a3"
    expected = sorted(set(_TREE_SOLOS) | set(prefer.values()))
    kept = kept_list.read_text().splitlines()
    if kept != expected:
        return f"a3 kept {kept}, expected {expected}"
    return ""


FIXTURES: tuple[GoldenFixture, ...] = (
    GoldenFixture(
        name="entropy-ceiling",
        origin="closed form: entropy of a fair coin is ln 2",
        expectation="constant-0.5 stack gives entropy ln 2 everywhere, MI 0",
        tolerance=1e-6,
        run=_fx_entropy_ceiling,
    ),
    GoldenFixture(
        name="hand-mi",
        origin="hand-computed two-sample case {0.2, 0.8}",
        expectation="mean MI 0.192745, mean entropy ln 2",
        tolerance=1e-4,
        run=_fx_hand_mi,
    ),
    GoldenFixture(
        name="ece-hand",
        origin="hand-enumerated 10-pixel binning case",
        expectation="pooled ECE 0.08",
        tolerance=1e-4,
        run=_fx_ece_hand,
    ),
    GoldenFixture(
        name="fold-averages",
        origin="reference fold table (checked-in fixture JSONs)",
        expectation="fold means 0.7514 / 0.7144 / 0.7179 / 0.7211",
        tolerance=5e-4,
        run=_fx_fold_averages,
    ),
    GoldenFixture(
        name="calibration-oracle",
        origin="statistical oracle: truth drawn from the reported probability",
        expectation="calibrated ECE < 0.01 on 1e6 pixels; overconfident ECE larger",
        tolerance=0.01,
        run=_fx_calibration_oracle,
    ),
    GoldenFixture(
        name="pmap-roundtrip",
        origin="serialization identity",
        expectation="write-read-write is byte-stable; CLI mean equals library mean",
        tolerance=0.0,
        run=_fx_pmap_roundtrip,
    ),
    GoldenFixture(
        name="dedup-planted-tree",
        origin="planted duplicate tree (checked-in fixture images)",
        expectation="keep lists under a1/a2/a3 match the planted layout",
        tolerance=0.0,
        run=_fx_dedup_planted,
    ),
)


def run_fixture_suite(only: list[str] | None = None) -> list[FixtureResult]:
    """Run the golden fixtures; unknown names in ``only`` are an error."""
    if only:
        known = {f.name for f in FIXTURES}
        unknown = sorted(set(only) - known)
        if unknown:
            raise InvalidSpecError(
                f"unknown fixture(s) {unknown}; available: {sorted(known)}"
            )
    results = []
    for fixture in FIXTURES:
        if only and fixture.name not in only:
            continue
        # Sub-runs print their usual one-liners; swallow them so the suite
        # reports one verdict line per fixture. Stderr is kept for failures.
        out, err = io.StringIO(), io.StringIO()
        with tempfile.TemporaryDirectory(prefix=f"seguq-{fixture.name}-") as td, \
                contextlib.redirect_stdout(out), contextlib.redirect_stderr(err):
            try:
                detail = fixture.run(Path(td))
            except Exception as exc:
                detail = f"{type(exc).__name__}: {exc}"
        if detail and err.getvalue().strip():
            detail += f"; stderr: {err.getvalue().strip().splitlines()[-1]}"
        results.append(FixtureResult(fixture.name, detail == "", detail))
    return results
