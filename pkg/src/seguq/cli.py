"""Command-line entry points for the full pipeline.

Subcommands mirror the processing order: synth (make test data), aggregate,
uncertainty, calibrate, evaluate, report, plus dedup for dataset audits and
selfcheck for the built-in fixture suite.

Conventions shared by all subcommands:

* exit code 0 on success, 2 for validation or usage problems, 1 for
  anything unexpected;
* diagnostics go to stderr as ``error [<code>]: <message>`` where <code>
  is a stable, greppable token;
* every run leaves a ``manifest.json`` next to its primary output
  recording the resolved configuration and timestamps;
* prediction/ground-truth directories pair files by stem: ``case007.pmap``
  matches ``case007.png``. Unpaired files on either side abort the run.

The SEGUQ_THREADS environment variable caps the worker pool used for
per-case work; unset or invalid values fall back to min(8, cpu count).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .aggregate import AggregationMode, aggregate_mean
from .calibration import (
    BinningConfig,
    compute_ece,
    pool_calibration,
    write_reliability_csv,
    write_report_json,
)
from .datamodel import LN2, ProbabilityMap
from .dedup import (
    DedupStrategy,
    apply_strategy,
    audit_report,
    find_duplicates,
    index_dataset,
    read_preferences_csv,
    write_audit_json,
    write_kept_manifest,
)
from .errors import InvalidSpecError, PairingError, ToolkitError
from .fileio import (
    read_float32_raw,
    read_mask,
    read_sample_stack,
    write_float32_raw,
    write_mask_pgm,
    write_probability_map,
    write_sample_stack,
    write_uncertainty_pgm,
)
from .manifest import SCHEMA_VERSIONS, build_manifest, utc_now_iso, write_manifest
from .overlap import (
    aggregate_folds,
    evaluate_case,
    read_cases_json,
    write_cases_csv,
    write_cases_json,
)
from .synthgen import Regime, SynthSpec, generate
from .uncertainty import (
    mutual_information_map,
    nats_to_bits,
    summarize_uncertainty,
)

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_USAGE = 2

_MODES = {
    "mc": AggregationMode.MC_DROPOUT,
    "ensemble": AggregationMode.DEEP_ENSEMBLE,
    "combined": AggregationMode.COMBINED,
}

_PRED_SUFFIXES = (".pmap", ".f32")
_MASK_SUFFIXES = (".png", ".pgm")


def thread_count() -> int:
    try:
        n = int(os.environ.get("SEGUQ_THREADS", ""))
    except ValueError:
        n = 0
    if n >= 1:
        return n
    return min(8, os.cpu_count() or 1)


def _pair_by_stem(pred_dir: Path, gt_dir: Path) -> list[tuple[str, Path, Path]]:
    preds = {
        p.stem: p
        for p in sorted(pred_dir.iterdir())
        if p.suffix in _PRED_SUFFIXES
    }
    gts = {
        p.stem: p
        for p in sorted(gt_dir.iterdir())
        if p.suffix in _MASK_SUFFIXES
    }
    lone_preds = sorted(set(preds) - set(gts))
    lone_gts = sorted(set(gts) - set(preds))
    if lone_preds or lone_gts:
        raise PairingError(
            "prediction/truth stems do not pair up: "
            f"predictions without truth {lone_preds}, "
            f"truths without prediction {lone_gts}"
        )
    if not preds:
        raise PairingError(f"no predictions ({'/'.join(_PRED_SUFFIXES)}) in {pred_dir}")
    return [(stem, preds[stem], gts[stem]) for stem in sorted(preds)]


def _read_mean(path: Path) -> ProbabilityMap:
    if path.suffix == ".pmap":
        stack = read_sample_stack(path)
        return aggregate_mean(stack, AggregationMode.COMBINED)
    return ProbabilityMap(read_float32_raw(path).astype(np.float64))


# ---------------------------------------------------------------- commands


def _cmd_aggregate(args: argparse.Namespace) -> int:
    started = utc_now_iso()
    stack = read_sample_stack(args.input)
    mode = _MODES[args.mode]
    mean = aggregate_mean(stack, mode)
    out = Path(args.out)
    write_probability_map(mean, out, extra={"source": str(args.input)})
    run = build_manifest(
        "aggregate",
        {"mode": args.mode, "k": stack.k, "t": stack.t},
        [args.input],
        [out],
        started,
    )
    write_manifest(run, out)
    print(f"{out}: {mean.height}x{mean.width} mean map from K={stack.k} T={stack.t}")
    return EXIT_OK


def _write_field(field, path: Path, units: str) -> None:
    if path.suffix == ".pgm":
        write_uncertainty_pgm(field, path, full_scale=LN2 if units == "nats" else 1.0)
    elif path.suffix == ".f32":
        write_float32_raw(field, path, extra={"units": units})
    else:
        raise InvalidSpecError(
            f"{path}: uncertainty maps support .pgm or .f32, got {path.suffix!r}"
        )


def _cmd_uncertainty(args: argparse.Namespace) -> int:
    started = utc_now_iso()
    outputs = [p for p in (args.entropy_out, args.mi_out, args.summary_out) if p]
    if not outputs:
        raise InvalidSpecError(
            "nothing to do: pass --entropy-out, --mi-out or --summary-out"
        )
    stack = read_sample_stack(args.input)
    maps = mutual_information_map(stack)
    entropy, mi = maps.entropy, maps.mutual_information
    summary = summarize_uncertainty(maps)
    if args.base == "bits":
        entropy = nats_to_bits(entropy)
        mi = nats_to_bits(mi)
        summary = summary.scaled(1.0 / LN2)
    if args.entropy_out:
        _write_field(entropy, Path(args.entropy_out), args.base)
    if args.mi_out:
        _write_field(mi, Path(args.mi_out), args.base)
    if args.summary_out:
        doc = {
            "schema_version": SCHEMA_VERSIONS["uncertainty_summary"],
            "case_id": stack.case_id,
            "units": args.base,
            **summary.to_json_dict(),
        }
        Path(args.summary_out).write_text(json.dumps(doc, indent=2) + "\n")
    run = build_manifest(
        "uncertainty",
        {"base": args.base, "k": stack.k, "t": stack.t},
        [args.input],
        outputs,
        started,
    )
    write_manifest(run, Path(outputs[0]))
    print(
        f"{stack.case_id}: mean entropy {summary.mean_entropy:.6f} "
        f"mean MI {summary.mean_mi:.6f} ({args.base})"
    )
    return EXIT_OK


def _range_pair(text: str) -> tuple[float, float]:
    try:
        low, high = (float(x) for x in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"expected LOW:HIGH (e.g. 0.5:1.0), got {text!r}"
        ) from None
    return low, high


def _cmd_calibrate(args: argparse.Namespace) -> int:
    started = utc_now_iso()
    cfg = BinningConfig(
        bin_count=args.bins,
        range_low=args.range[0],
        range_high=args.range[1],
        threshold=args.threshold,
    )
    pairs = _pair_by_stem(Path(args.pred_dir), Path(args.gt_dir))

    def one(pair):
        stem, pred_path, gt_path = pair
        return stem, compute_ece(_read_mean(pred_path), read_mask(gt_path), cfg)

    with ThreadPoolExecutor(max_workers=thread_count()) as pool:
        per_case = dict(pool.map(one, pairs))
    pooled = pool_calibration([per_case[stem] for stem, _, _ in pairs])
    out = Path(args.out)
    write_report_json(pooled, per_case, out)
    outputs = [out]
    if args.reliability:
        write_reliability_csv(pooled, args.reliability)
        outputs.append(Path(args.reliability))
    run = build_manifest(
        "calibrate",
        {
            "bins": cfg.bin_count,
            "range": [cfg.range_low, cfg.range_high],
            "threshold": cfg.threshold,
            "cases": len(pairs),
        },
        [args.pred_dir, args.gt_dir],
        outputs,
        started,
    )
    write_manifest(run, out)
    print(
        f"pooled ECE {pooled.ece:.6f} over {pooled.total_pixels} pixels "
        f"({pooled.foreground_pixels} foreground) from {len(pairs)} cases"
    )
    return EXIT_OK


def _cmd_evaluate(args: argparse.Namespace) -> int:
    started = utc_now_iso()
    if not (args.out_csv or args.out_json):
        raise InvalidSpecError("nothing to do: pass --out-csv and/or --out-json")
    pairs = _pair_by_stem(Path(args.pred_dir), Path(args.gt_dir))

    def one(pair):
        stem, pred_path, gt_path = pair
        truth = read_mask(gt_path)
        summary = None
        if pred_path.suffix == ".pmap":
            stack = read_sample_stack(pred_path)
            mean = aggregate_mean(stack, AggregationMode.COMBINED)
            if args.uncertainty != "none":
                summary = summarize_uncertainty(mutual_information_map(stack))
                if args.uncertainty == "bits":
                    summary = summary.scaled(1.0 / LN2)
        else:
            if args.uncertainty != "none":
                raise InvalidSpecError(
                    f"{pred_path}: uncertainty summaries need sample stacks (.pmap)"
                )
            mean = _read_mean(pred_path)
        return evaluate_case(
            mean, truth, threshold=args.threshold, case_id=stem, uncertainty=summary
        )

    with ThreadPoolExecutor(max_workers=thread_count()) as pool:
        cases = list(pool.map(one, pairs))
    outputs = []
    if args.out_json:
        write_cases_json(cases, args.out_json)
        outputs.append(Path(args.out_json))
    if args.out_csv:
        write_cases_csv(cases, args.out_csv)
        outputs.append(Path(args.out_csv))
    run = build_manifest(
        "evaluate",
        {
            "threshold": args.threshold,
            "uncertainty": args.uncertainty,
            "cases": len(cases),
        },
        [args.pred_dir, args.gt_dir],
        outputs,
        started,
    )
    write_manifest(run, outputs[0])
    mean_dice = sum(c.dice for c in cases) / len(cases)
    print(f"{len(cases)} cases, mean dice {mean_dice:.4f}")
    return EXIT_OK


def _cmd_report(args: argparse.Namespace) -> int:
    started = utc_now_iso()
    doc = json.loads(Path(args.folds).read_text())
    folds = doc.get("folds", doc)
    if not isinstance(folds, dict) or not folds:
        raise InvalidSpecError(
            f"{args.folds}: expected a non-empty JSON object mapping fold "
            "labels to a mean or a list of case ids"
        )
    by_case = {}
    if args.cases:
        by_case = {c.case_id: c for c in read_cases_json(args.cases)}
    labels, means = [], []
    for label, value in folds.items():
        if isinstance(value, (int, float)) and not isinstance(value, bool):
            fold_mean = float(value)
        elif isinstance(value, list):
            if not args.cases:
                raise InvalidSpecError(
                    f"fold {label!r} lists case ids; pass --cases with their metrics"
                )
            missing = [cid for cid in value if cid not in by_case]
            if missing:
                raise PairingError(f"fold {label!r} references unknown cases {missing}")
            if not value:
                raise InvalidSpecError(f"fold {label!r} lists no cases")
            fold_mean = sum(by_case[cid].dice for cid in value) / len(value)
        else:
            raise InvalidSpecError(
                f"fold {label!r}: expected a number or a list of case ids"
            )
        labels.append(str(label))
        means.append(fold_mean)
    agg = aggregate_folds(means)
    out = Path(args.out)
    result = agg.to_json_dict(fold_labels=labels)
    result["metric"] = "dice"
    out.write_text(json.dumps(result, indent=2) + "\n")
    run = build_manifest(
        "report",
        {"folds": labels, "metric": "dice"},
        [p for p in (args.folds, args.cases) if p],
        [out],
        started,
    )
    write_manifest(run, out)
    print(f"mean dice {agg.mean:.4f} +/- {agg.std:.4f} over {len(labels)} folds")
    return EXIT_OK


def _cmd_dedup(args: argparse.Namespace) -> int:
    started = utc_now_iso()
    if not (args.report or args.manifest):
        raise InvalidSpecError("nothing to do: pass --report and/or --manifest")
    if args.manifest and not args.strategy:
        raise InvalidSpecError("--manifest needs --strategy to know what to keep")
    prefs = read_preferences_csv(args.prefs) if args.prefs else None
    index = index_dataset(args.dir, max_workers=thread_count())
    groups = find_duplicates(index, hamming_threshold=args.hamming)
    outputs = []
    if args.report:
        write_audit_json(
            audit_report(index, groups, hamming_threshold=args.hamming, preferences=prefs),
            args.report,
        )
        outputs.append(Path(args.report))
    if args.strategy:
        strategy = DedupStrategy(args.strategy)
        kept = apply_strategy(index, groups, strategy, preferences=prefs)
        if args.manifest:
            write_kept_manifest(kept, args.manifest)
            outputs.append(Path(args.manifest))
    run = build_manifest(
        "dedup",
        {
            "strategy": args.strategy,
            "hamming_threshold": args.hamming,
            "preferences": args.prefs,
        },
        [args.dir],
        outputs,
        started,
    )
    write_manifest(run, outputs[0])
    conflicts = sum(1 for g in groups if g.conflict)
    print(
        f"{len(index.entries)} images, {len(groups)} duplicate groups "
        f"({conflicts} with conflicting masks)"
    )
    return EXIT_OK


def _cmd_synth(args: argparse.Namespace) -> int:
    started = utc_now_iso()
    if args.pixels is not None and (args.height or args.width):
        raise InvalidSpecError("pass either --pixels or --height/--width, not both")
    if args.pixels is None and not (args.height and args.width):
        raise InvalidSpecError("pass --pixels or both --height and --width")
    common = dict(
        k=args.k,
        t=args.t,
        seed=args.seed,
        regime=Regime(args.regime),
        noise_scale=args.noise,
        gamma=args.gamma,
    )
    if args.pixels is not None:
        spec = SynthSpec.from_pixels(args.pixels, **common)
    else:
        spec = SynthSpec(height=args.height, width=args.width, **common)
    out = Path(args.out)
    if out.suffix != ".pmap":
        raise InvalidSpecError(f"{out}: synth output must be a .pmap path")
    mask_out = Path(args.mask_out) if args.mask_out else out.with_name(out.stem + "_truth.pgm")
    stack, truth = generate(spec, case_id=out.stem)
    write_sample_stack(stack, out)
    write_mask_pgm(truth, mask_out)
    sidecar = out.with_suffix(".json")
    sidecar.write_text(json.dumps(spec.to_json_dict(), indent=2) + "\n")
    run = build_manifest(
        "synth",
        spec.to_json_dict(),
        [],
        [out, mask_out, sidecar],
        started,
    )
    write_manifest(run, out)
    print(
        f"{out}: K={spec.k} T={spec.t} {spec.height}x{spec.width} "
        f"{spec.regime.value} stack, truth in {mask_out}"
    )
    return EXIT_OK


def _cmd_selfcheck(args: argparse.Namespace) -> int:
    from .selfcheck import run_fixture_suite

    results = run_fixture_suite(only=args.only or None)
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        detail = f" ({r.detail})" if r.detail else ""
        print(f"[{status}] {r.name}{detail}")
    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} fixtures passed")
    return EXIT_OK if not failed else EXIT_INTERNAL


# ------------------------------------------------------------------ parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="seguq",
        description="Uncertainty, calibration and overlap analysis for "
        "stochastic segmentation prediction stacks.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("aggregate", help="mean probability map from a stack")
    p.add_argument("--input", required=True, help="input .pmap stack")
    p.add_argument("--mode", choices=sorted(_MODES), default="combined")
    p.add_argument("--out", required=True, help="output .pmap or .f32 path")
    p.set_defaults(func=_cmd_aggregate)

    p = sub.add_parser("uncertainty", help="entropy and mutual-information maps")
    p.add_argument("--input", required=True, help="input .pmap stack")
    p.add_argument("--entropy-out", help="entropy map (.pgm or .f32)")
    p.add_argument("--mi-out", help="mutual-information map (.pgm or .f32)")
    p.add_argument("--summary-out", help="per-case summary statistics JSON")
    p.add_argument("--base", choices=("nats", "bits"), default="nats")
    p.set_defaults(func=_cmd_uncertainty)

    p = sub.add_parser("calibrate", help="pooled and per-case calibration report")
    p.add_argument("--pred-dir", required=True, help="directory of .pmap/.f32 predictions")
    p.add_argument("--gt-dir", required=True, help="directory of .png/.pgm truth masks")
    p.add_argument("--bins", type=int, default=30)
    p.add_argument("--range", type=_range_pair, default=(0.5, 1.0), metavar="LOW:HIGH")
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--out", required=True, help="report JSON path")
    p.add_argument("--reliability", help="optional reliability-diagram CSV path")
    p.set_defaults(func=_cmd_calibrate)

    p = sub.add_parser("evaluate", help="per-case dice/IoU/accuracy table")
    p.add_argument("--pred-dir", required=True)
    p.add_argument("--gt-dir", required=True)
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--uncertainty", choices=("none", "nats", "bits"), default="none",
                   help="attach per-case uncertainty summaries (needs .pmap inputs)")
    p.add_argument("--out-csv")
    p.add_argument("--out-json")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("report", help="fold-level mean +/- std rollup")
    p.add_argument("--folds", required=True,
                   help="JSON mapping fold label -> mean or -> list of case ids")
    p.add_argument("--cases", help="cases JSON from `evaluate` (for id lists)")
    p.add_argument("--out", required=True, help="fold aggregate JSON path")
    p.set_defaults(func=_cmd_report)

    p = sub.add_parser("dedup", help="duplicate audit over a dataset tree")
    p.add_argument("--dir", required=True, help="dataset root")
    p.add_argument("--strategy", choices=[s.value for s in DedupStrategy])
    p.add_argument("--prefs", help="preference CSV (group_id,keep_path) for a3")
    p.add_argument("--hamming", type=int, default=4,
                   help="max Hamming distance between perceptual hashes")
    p.add_argument("--report", help="audit JSON path")
    p.add_argument("--manifest", help="kept-files list path (one per line)")
    p.set_defaults(func=_cmd_dedup)

    p = sub.add_parser("synth", help="deterministic synthetic stack + truth mask")
    p.add_argument("--pixels", type=int, help="pixel count (near-square shape)")
    p.add_argument("--height", type=int)
    p.add_argument("--width", type=int)
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--t", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--regime", choices=[r.value for r in Regime],
                   default=Regime.CALIBRATED.value)
    p.add_argument("--noise", type=float, default=0.0,
                   help="std of per-sample logit jitter")
    p.add_argument("--gamma", type=float, default=None,
                   help="distortion exponent (default per regime: 1, 3, 1/3)")
    p.add_argument("--out", required=True, help="output .pmap path")
    p.add_argument("--mask-out", help="truth mask path (default <out>_truth.pgm)")
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("selfcheck", help="run the built-in golden fixture suite")
    p.add_argument("--only", action="append", help="run only the named fixture(s)")
    p.set_defaults(func=_cmd_selfcheck)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ToolkitError as exc:
        print(f"error [{exc.code}]: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error [io-failure]: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # pragma: no cover - defensive
        print(f"error [internal]: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
