"""Run manifests: every CLI invocation records how its outputs were produced.

A manifest.json lands in the directory of the primary output. It carries the
tool version, the subcommand and its fully resolved configuration (defaults
filled in), input/output paths, UTC timestamps, and the schema version of
every file format the toolkit emits, so downstream readers can detect drift.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from datetime import datetime, timezone
from importlib import metadata
from pathlib import Path
from typing import Mapping, Sequence

TOOL_NAME = "seguq"

MANIFEST_SCHEMA_VERSION = 1

# Versions of the on-disk formats this build writes. Bump on any
# incompatible layout change.
SCHEMA_VERSIONS = {
    "pmap": 1,
    "float32_raw_sidecar": 1,
    "uncertainty_summary": 1,
    "calibration_report": 1,
    "cases_csv": 1,
    "cases_json": 1,
    "fold_aggregate": 1,
    "dedup_audit": 1,
    "synth_spec": 1,
    "manifest": MANIFEST_SCHEMA_VERSION,
}


def tool_version() -> str:
    try:
        return metadata.version(TOOL_NAME)
    except metadata.PackageNotFoundError:
        return "0+unknown"


def utc_now_iso() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="microseconds")


@dataclass(frozen=True)
class RunManifest:
    subcommand: str
    configuration: Mapping[str, object]
    inputs: tuple[str, ...]
    outputs: tuple[str, ...]
    started_utc: str
    finished_utc: str

    def to_json_dict(self) -> dict:
        return {
            "schema_version": MANIFEST_SCHEMA_VERSION,
            "tool": {"name": TOOL_NAME, "version": tool_version()},
            "subcommand": self.subcommand,
            "configuration": dict(self.configuration),
            "inputs": list(self.inputs),
            "outputs": list(self.outputs),
            "started_utc": self.started_utc,
            "finished_utc": self.finished_utc,
            "format_schema_versions": dict(SCHEMA_VERSIONS),
        }


def build_manifest(
    subcommand: str,
    configuration: Mapping[str, object],
    inputs: Sequence[str | Path],
    outputs: Sequence[str | Path],
    started_utc: str,
) -> RunManifest:
    return RunManifest(
        subcommand=subcommand,
        configuration=dict(configuration),
        inputs=tuple(str(p) for p in inputs),
        outputs=tuple(str(p) for p in outputs),
        started_utc=started_utc,
        finished_utc=utc_now_iso(),
    )


def write_manifest(run: RunManifest, primary_output: str | Path) -> Path:
    """Write manifest.json beside the primary output; returns its path."""
    target = Path(primary_output)
    directory = target if target.is_dir() else target.parent
    path = directory / "manifest.json"
    path.write_text(json.dumps(run.to_json_dict(), indent=2) + "\n")
    return path
