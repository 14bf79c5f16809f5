import json
from datetime import datetime

from seguq.manifest import (
    MANIFEST_SCHEMA_VERSION,
    SCHEMA_VERSIONS,
    build_manifest,
    tool_version,
    utc_now_iso,
    write_manifest,
)


def test_utc_timestamp_parses_and_is_utc():
    stamp = utc_now_iso()
    parsed = datetime.fromisoformat(stamp)
    assert parsed.utcoffset().total_seconds() == 0


def test_tool_version_is_nonempty():
    assert tool_version()


def test_build_manifest_normalizes_paths(tmp_path):
    run = build_manifest(
        "aggregate",
        {"mode": "combined"},
        inputs=[tmp_path / "in.pmap"],
        outputs=[tmp_path / "out.f32"],
        started_utc=utc_now_iso(),
    )
    assert run.inputs == (str(tmp_path / "in.pmap"),)
    assert run.outputs == (str(tmp_path / "out.f32"),)
    assert run.started_utc <= run.finished_utc


def test_json_document_fields():
    run = build_manifest("synth", {"seed": 3}, [], ["a.pmap"], utc_now_iso())
    doc = run.to_json_dict()
    assert doc["schema_version"] == MANIFEST_SCHEMA_VERSION
    assert doc["tool"]["name"] == "seguq"
    assert doc["subcommand"] == "synth"
    assert doc["configuration"] == {"seed": 3}
    assert doc["format_schema_versions"] == SCHEMA_VERSIONS
    # every format the toolkit writes must be listed
    assert {"pmap", "calibration_report", "dedup_audit", "synth_spec"} <= set(
        doc["format_schema_versions"]
    )


def test_write_manifest_lands_beside_file_output(tmp_path):
    out = tmp_path / "sub" / "mean.f32"
    out.parent.mkdir()
    out.write_bytes(b"")
    run = build_manifest("aggregate", {}, [], [out], utc_now_iso())
    path = write_manifest(run, out)
    assert path == out.parent / "manifest.json"
    doc = json.loads(path.read_text())
    assert doc["outputs"] == [str(out)]


def test_write_manifest_into_directory_output(tmp_path):
    run = build_manifest("dedup", {}, [], [tmp_path], utc_now_iso())
    path = write_manifest(run, tmp_path)
    assert path == tmp_path / "manifest.json"
    assert json.loads(path.read_text())["subcommand"] == "dedup"


def test_write_manifest_overwrites_previous_run(tmp_path):
    first = build_manifest("synth", {"seed": 1}, [], [tmp_path], utc_now_iso())
    second = build_manifest("synth", {"seed": 2}, [], [tmp_path], utc_now_iso())
    write_manifest(first, tmp_path)
    write_manifest(second, tmp_path)
    manifests = list(tmp_path.glob("manifest.json"))
    assert len(manifests) == 1
    assert json.loads(manifests[0].read_text())["configuration"] == {"seed": 2}
