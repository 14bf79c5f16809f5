import json
import shutil

import pytest

import seguq.selfcheck as selfcheck
from seguq.errors import InvalidSpecError
from seguq.selfcheck import FIXTURES, run_fixture_suite

EXPECTED_NAMES = [
    "entropy-ceiling",
    "hand-mi",
    "ece-hand",
    "fold-averages",
    "calibration-oracle",
    "pmap-roundtrip",
    "dedup-planted-tree",
]


def test_every_fixture_is_documented():
    for fixture in FIXTURES:
        assert fixture.origin and fixture.expectation
        assert fixture.tolerance >= 0


def test_full_suite_passes():
    results = run_fixture_suite()
    assert [r.name for r in results] == EXPECTED_NAMES
    failures = [(r.name, r.detail) for r in results if not r.passed]
    assert not failures, failures


def test_suite_swallows_subcommand_chatter(capsys):
    run_fixture_suite(only=["hand-mi"])
    captured = capsys.readouterr()
    assert captured.out == ""


def test_only_filter_limits_run():
    results = run_fixture_suite(only=["ece-hand", "hand-mi"])
    assert [r.name for r in results] == ["hand-mi", "ece-hand"]


def test_unknown_fixture_name_rejected():
    with pytest.raises(InvalidSpecError):
        run_fixture_suite(only=["hand-mi", "nonexistent"])


def test_tampered_fixture_is_detected(tmp_path, monkeypatch):
    # the checker must actually be able to fail: corrupt a golden input
    # and confirm the corresponding fixture reports a divergence
    tampered = tmp_path / "fixtures"
    shutil.copytree(selfcheck.FIXTURE_ROOT, tampered)
    fold_file = tampered / "folds" / "busi_full.json"
    doc = json.loads(fold_file.read_text())
    first = next(iter(doc["folds"]))
    doc["folds"][first] = 0.99
    fold_file.write_text(json.dumps(doc))
    monkeypatch.setattr(selfcheck, "FIXTURE_ROOT", tampered)
    (result,) = run_fixture_suite(only=["fold-averages"])
    assert not result.passed
    assert "busi_full" in result.detail


def test_broken_environment_fails_without_raising(tmp_path, monkeypatch):
    monkeypatch.setattr(selfcheck, "FIXTURE_ROOT", tmp_path / "missing")
    (result,) = run_fixture_suite(only=["ece-hand"])
    assert not result.passed
    assert result.detail
