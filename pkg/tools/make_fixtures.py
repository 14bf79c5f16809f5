#!/usr/bin/env python3
"""Regenerate the checked-in fixture corpus under src/seguq/fixtures.

Everything here is deterministic (fixed seeds, fixed literals) so the
corpus can be rebuilt byte-for-byte at any time. The script also asserts
the properties the fixtures are meant to plant (hash distances, exact
dice values, ECE arithmetic) so a regression in the generator is caught
at generation time rather than in the test suite.

Run from the repository root:  python tools/make_fixtures.py
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import numpy as np
from PIL import Image

REPO = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(REPO / "src"))

from seguq.datamodel import SampleStack  # noqa: E402
from seguq.dedup import dhash64, hamming64  # noqa: E402
from seguq.fileio import write_float32_raw, write_sample_stack  # noqa: E402

FIXTURES = REPO / "src" / "seguq" / "fixtures"


def _save_gray(arr: np.ndarray, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(arr.astype(np.uint8), mode="L").save(path)


def _rect_mask(shape: tuple[int, int], r0, r1, c0, c1) -> np.ndarray:
    m = np.zeros(shape, dtype=np.uint8)
    m[r0:r1, c0:c1] = 255
    return m


def _texture(seed: int, shape=(64, 64)) -> np.ndarray:
    # Values in [30, 200]: far enough from 0/255 that downscale ringing
    # cannot clip, which keeps the +2 brightness shift hash-invariant.
    rng = np.random.default_rng(seed)
    base = rng.integers(30, 201, size=shape)
    return base.astype(np.uint8)


def build_dedup_tree() -> None:
    tree = FIXTURES / "dedup_tree"
    tree.mkdir(parents=True, exist_ok=True)
    shape = (64, 64)

    benign = _texture(101, shape)
    malignant = _texture(202, shape)
    normal = _texture(303, shape)
    solo_a = _texture(404, shape)
    solo_b = _texture(505, shape)

    benign_mask = _rect_mask(shape, 10, 30, 10, 30)
    malignant_mask = _rect_mask(shape, 20, 44, 16, 40)
    # The near-duplicate pair carries conflicting annotations with dice
    # exactly 0.8: two 20x20 rectangles overlapping in a 20x16 block.
    normal_mask_a = _rect_mask(shape, 4, 24, 4, 24)
    normal_mask_b = _rect_mask(shape, 4, 24, 8, 28)
    inter = np.count_nonzero((normal_mask_a > 0) & (normal_mask_b > 0))
    total = np.count_nonzero(normal_mask_a) + np.count_nonzero(normal_mask_b)
    assert 2 * inter / total == 0.8, (inter, total)

    # Exact pair 1: byte-identical PNG copies.
    _save_gray(benign, tree / "benign_001.png")
    _save_gray(benign, tree / "benign_001_copy.png")
    _save_gray(benign_mask, tree / "benign_001_mask.png")
    _save_gray(benign_mask, tree / "benign_001_copy_mask.png")

    # Exact pair 2: same pixels, different container (PNG vs PGM), so the
    # match must come from decoded-pixel hashing, not file bytes.
    _save_gray(malignant, tree / "malignant_007.png")
    _save_gray(malignant, tree / "malignant_007_dup.pgm")
    _save_gray(malignant_mask, tree / "malignant_007_mask.png")
    _save_gray(malignant_mask, tree / "malignant_007_dup_mask.png")

    # Near pair: +2 brightness preserves every horizontal gradient sign,
    # so the difference hashes agree while the content hashes differ.
    shifted = normal + 2
    assert shifted.max() <= 255
    _save_gray(normal, tree / "normal_003.png")
    _save_gray(shifted, tree / "normal_003_shift.png")
    _save_gray(normal_mask_a, tree / "normal_003_mask.png")
    _save_gray(normal_mask_b, tree / "normal_003_shift_mask.png")

    # Singletons; solo_101 has two annotators to exercise mask globbing.
    _save_gray(solo_a, tree / "solo_101.png")
    _save_gray(_rect_mask(shape, 8, 20, 8, 20), tree / "solo_101_mask.png")
    _save_gray(_rect_mask(shape, 8, 22, 8, 22), tree / "solo_101_mask_1.png")
    _save_gray(solo_b, tree / "solo_202.png")
    _save_gray(_rect_mask(shape, 30, 50, 30, 50), tree / "solo_202_mask.png")

    hashes = {
        name: dhash64(Image.open(tree / name))
        for name in (
            "benign_001.png",
            "malignant_007.png",
            "normal_003.png",
            "normal_003_shift.png",
            "solo_101.png",
            "solo_202.png",
        )
    }
    near = hamming64(hashes["normal_003.png"], hashes["normal_003_shift.png"])
    assert near <= 4, f"near pair drifted apart: hamming {near}"
    distinct = [
        ("benign_001.png", "malignant_007.png"),
        ("benign_001.png", "normal_003.png"),
        ("benign_001.png", "solo_101.png"),
        ("benign_001.png", "solo_202.png"),
        ("malignant_007.png", "normal_003.png"),
        ("malignant_007.png", "solo_101.png"),
        ("malignant_007.png", "solo_202.png"),
        ("normal_003.png", "solo_101.png"),
        ("normal_003.png", "solo_202.png"),
        ("solo_101.png", "solo_202.png"),
    ]
    for a, b in distinct:
        d = hamming64(hashes[a], hashes[b])
        assert d > 4, f"unrelated images collide: {a} vs {b} hamming {d}"
    print(f"dedup_tree: near-pair hamming {near}, all unrelated pairs > 4")


def build_ece_hand() -> None:
    """Ten pixels in two confidence groups: ECE 0.08 by hand.

    Six pixels report 0.9 with 5 correct, four report 0.6 with 2 correct:
    0.6*|5/6 - 0.9| + 0.4*|0.5 - 0.6| = 0.08.
    """
    pred = FIXTURES / "ece_hand" / "pred"
    gt = FIXTURES / "ece_hand" / "gt"
    pred.mkdir(parents=True, exist_ok=True)
    gt.mkdir(parents=True, exist_ok=True)
    p = np.array([[0.9] * 6 + [0.6] * 4], dtype=np.float32)
    truth = np.array([[255, 255, 255, 255, 255, 0, 255, 255, 0, 0]], dtype=np.uint8)
    write_float32_raw(p, pred / "hand.f32")
    _save_gray(truth, gt / "hand.png")

    conf_hi = float(np.float32(0.9))
    conf_lo = float(np.float32(0.6))
    ece = 0.6 * abs(5 / 6 - conf_hi) + 0.4 * abs(0.5 - conf_lo)
    assert abs(ece - 0.08) < 1e-6, ece
    print(f"ece_hand: planted ECE {ece:.9f}")


def build_fold_tables() -> None:
    folds_dir = FIXTURES / "folds"
    folds_dir.mkdir(parents=True, exist_ok=True)
    tables = {
        "busi_full": [0.7478, 0.7147, 0.7769, 0.7667, 0.7509],
        "busi_a1": [0.7048, 0.7092, 0.6815, 0.7512, 0.7253],
        "busi_a2": [0.6927, 0.7366, 0.7324, 0.7260, 0.7016],
        "busi_a3": [0.7732, 0.6657, 0.7084, 0.7670, 0.6911],
    }
    for name, values in tables.items():
        doc = {
            "folds": {f"fold{i + 1}": v for i, v in enumerate(values)},
        }
        (folds_dir / f"{name}.json").write_text(json.dumps(doc, indent=2) + "\n")
        mean = sum(values) / len(values)
        print(f"folds/{name}.json: mean {mean:.5f}")


def build_tiny_stacks() -> None:
    stacks = FIXTURES / "stacks"
    stacks.mkdir(parents=True, exist_ok=True)
    half = np.full((1, 1, 8, 8), 0.5, dtype=np.float32)
    write_sample_stack(SampleStack(half, case_id="constant_half"),
                       stacks / "constant_half.pmap")
    pair = np.array([0.2, 0.8], dtype=np.float32).reshape(2, 1, 1, 1)
    write_sample_stack(SampleStack(pair, case_id="hand_mi"),
                       stacks / "hand_mi.pmap")
    print("stacks: constant_half.pmap, hand_mi.pmap")


def main() -> None:
    build_dedup_tree()
    build_ece_hand()
    build_fold_tables()
    build_tiny_stacks()
    print(f"fixture corpus written under {FIXTURES}")


if __name__ == "__main__":
    main()
