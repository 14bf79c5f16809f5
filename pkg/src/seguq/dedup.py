"""Dataset duplicate audit: hashing, grouping and removal strategies.

Exact duplicates are found by hashing decoded pixels (so re-encoded copies
match), near-duplicates by a 64-bit difference hash of the downscaled
grayscale image with a configurable Hamming threshold. Duplicate groups
are connected components over the union of both relations. Each group
carries the pairwise overlap of its members' annotations, because
duplicated scans often ship with conflicting masks.

Three removal strategies are offered for pairs: drop the first occurrence,
drop the second occurrence, or keep a member named in an external
preference table. Occurrence order is lexicographic path order. For groups
larger than a pair the first two strategies generalize to keeping exactly
one member (the last, respectively the first), so that a single application
leaves no detected duplicates behind; such groups are flagged in the audit
report.
"""

from __future__ import annotations

import csv
import enum
import hashlib
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
from PIL import Image, UnidentifiedImageError

from .datamodel import BinaryMask
from .errors import (
    MissingMaskError,
    MissingPreferenceError,
    ShapeMismatchError,
    UnreadableImageError,
)
from .overlap import dice

AUDIT_SCHEMA_VERSION = 1
DEFAULT_HAMMING_THRESHOLD = 4

_IMAGE_SUFFIXES = (".png", ".pgm")


def dhash64(image: Image.Image) -> int:
    """64-bit difference hash: 9x8 grayscale downscale, row-wise gradient sign."""
    small = image.convert("L").resize((9, 8), Image.Resampling.LANCZOS)
    arr = np.asarray(small, dtype=np.int16)
    bits = (arr[:, 1:] > arr[:, :-1]).ravel()
    value = 0
    for bit in bits:
        value = (value << 1) | int(bit)
    return value


def hamming64(a: int, b: int) -> int:
    return (a ^ b).bit_count()


def content_hash(image: Image.Image) -> str:
    """SHA-256 over the decoded 8-bit grayscale pixels plus the dimensions."""
    gray = image.convert("L")
    h = hashlib.sha256()
    h.update(f"{gray.width}x{gray.height}:".encode("ascii"))
    h.update(gray.tobytes())
    return h.hexdigest()


@dataclass(frozen=True)
class DatasetEntry:
    image_path: str  # relative to the dataset root, posix separators
    mask_paths: tuple[str, ...]
    content_hash: str
    perceptual_hash: int
    width: int
    height: int


@dataclass(frozen=True)
class DatasetIndex:
    root: str
    entries: tuple[DatasetEntry, ...]  # sorted by image_path

    def entry_paths(self) -> list[str]:
        return [e.image_path for e in self.entries]


@dataclass(frozen=True)
class PairwiseDice:
    a: str
    b: str
    dice: float


@dataclass(frozen=True)
class DuplicateGroup:
    """Entries judged to depict the same scan, in dataset order."""

    members: tuple[str, ...]
    pairwise_dice: tuple[PairwiseDice, ...]
    conflict: bool  # any pairwise annotation dice < 1.0

    @property
    def group_id(self) -> str:
        return self.members[0]

    @property
    def larger_than_pair(self) -> bool:
        return len(self.members) > 2


class DedupStrategy(enum.Enum):
    DROP_FIRST = "a1"
    DROP_SECOND = "a2"
    KEEP_PREFERRED = "a3"


def _find_masks(image_path: Path) -> list[Path]:
    masks = []
    for suffix in _IMAGE_SUFFIXES:
        masks.extend(image_path.parent.glob(f"{image_path.stem}_mask*{suffix}"))
    return sorted(masks)


def _load_entry(root: Path, image_path: Path) -> DatasetEntry:
    rel = image_path.relative_to(root).as_posix()
    try:
        with Image.open(image_path) as img:
            img.load()
            chash = content_hash(img)
            phash = dhash64(img)
            width, height = img.size
    except (UnidentifiedImageError, OSError) as exc:
        raise UnreadableImageError(f"{image_path}: {exc}") from exc
    masks = _find_masks(image_path)
    if not masks:
        raise MissingMaskError(f"{image_path}: no '<name>_mask*' file beside it")
    for mask_path in masks:
        try:
            with Image.open(mask_path) as m:
                msize = m.size
        except (UnidentifiedImageError, OSError) as exc:
            raise UnreadableImageError(f"{mask_path}: {exc}") from exc
        if msize != (width, height):
            raise ShapeMismatchError(
                f"{mask_path}: mask is {msize}, image is {(width, height)}"
            )
    return DatasetEntry(
        image_path=rel,
        mask_paths=tuple(m.relative_to(root).as_posix() for m in masks),
        content_hash=chash,
        perceptual_hash=phash,
        width=width,
        height=height,
    )


def index_dataset(root: str | Path, max_workers: int | None = None) -> DatasetIndex:
    """Scan a dataset tree into a deterministic, lexicographically ordered index.

    Images are ``.png``/``.pgm`` files whose stem does not contain
    ``_mask``; each must have at least one ``<stem>_mask*`` companion.
    Hashing runs in a thread pool, ordering never depends on it.
    """
    root = Path(root)
    image_paths = sorted(
        p
        for suffix in _IMAGE_SUFFIXES
        for p in root.rglob(f"*{suffix}")
        if "_mask" not in p.stem
    )
    with ThreadPoolExecutor(max_workers=max_workers or 4) as pool:
        entries = list(pool.map(lambda p: _load_entry(root, p), image_paths))
    entries.sort(key=lambda e: e.image_path)
    return DatasetIndex(root=str(root), entries=tuple(entries))


def _union_annotation_mask(root: Path, entry: DatasetEntry) -> BinaryMask:
    # Multi-annotator variants (name_mask_1 etc.) are unioned into one mask
    # so conflict measurement sees a single annotation per image.
    from .fileio import read_mask

    combined = None
    for rel in entry.mask_paths:
        mask = read_mask(root / rel)
        combined = mask.values if combined is None else (combined | mask.values)
    return BinaryMask(combined)


def _resized_to(mask: BinaryMask, width: int, height: int) -> BinaryMask:
    if (mask.width, mask.height) == (width, height):
        return mask
    img = Image.fromarray(np.where(mask.values, 255, 0).astype(np.uint8))
    resized = img.resize((width, height), Image.Resampling.NEAREST)
    return BinaryMask(np.asarray(resized) > 0)


class _UnionFind:
    def __init__(self, n: int) -> None:
        self.parent = list(range(n))

    def find(self, i: int) -> int:
        while self.parent[i] != i:
            self.parent[i] = self.parent[self.parent[i]]
            i = self.parent[i]
        return i

    def union(self, i: int, j: int) -> None:
        ri, rj = self.find(i), self.find(j)
        if ri != rj:
            self.parent[max(ri, rj)] = min(ri, rj)


def find_duplicates(
    index: DatasetIndex, hamming_threshold: int = DEFAULT_HAMMING_THRESHOLD
) -> list[DuplicateGroup]:
    """Group entries related by equal content hash or near-equal difference hash.

    Groups are connected components, so membership does not depend on scan
    order. The pairwise comparison is O(n^2) over 64-bit hashes, which is
    fine for datasets up to tens of thousands of images.
    """
    entries = index.entries
    n = len(entries)
    uf = _UnionFind(n)

    by_content: dict[str, int] = {}
    for i, e in enumerate(entries):
        if e.content_hash in by_content:
            uf.union(by_content[e.content_hash], i)
        else:
            by_content[e.content_hash] = i

    for i in range(n):
        for j in range(i + 1, n):
            if hamming64(entries[i].perceptual_hash, entries[j].perceptual_hash) <= (
                hamming_threshold
            ):
                uf.union(i, j)

    components: dict[int, list[int]] = {}
    for i in range(n):
        components.setdefault(uf.find(i), []).append(i)

    root = Path(index.root)
    groups = []
    for ids in components.values():
        if len(ids) < 2:
            continue
        ids.sort()
        members = tuple(entries[i].image_path for i in ids)
        annotations = {
            i: _union_annotation_mask(root, entries[i]) for i in ids
        }
        pairwise = []
        conflict = False
        for a_pos, i in enumerate(ids):
            for j in ids[a_pos + 1 :]:
                ref = annotations[i]
                other = _resized_to(annotations[j], ref.width, ref.height)
                d = dice(ref, other)
                pairwise.append(
                    PairwiseDice(
                        a=entries[i].image_path, b=entries[j].image_path, dice=d
                    )
                )
                if d < 1.0:
                    conflict = True
        groups.append(
            DuplicateGroup(
                members=members,
                pairwise_dice=tuple(pairwise),
                conflict=conflict,
            )
        )
    groups.sort(key=lambda g: g.group_id)
    return groups


def _kept_member(
    group: DuplicateGroup,
    strategy: DedupStrategy,
    preferences: Mapping[str, str] | None,
) -> str:
    if strategy is DedupStrategy.DROP_FIRST:
        return group.members[-1]
    if strategy is DedupStrategy.DROP_SECOND:
        return group.members[0]
    if preferences is None or group.group_id not in preferences:
        raise MissingPreferenceError(
            f"no preferred member recorded for group {group.group_id!r}"
        )
    keep = preferences[group.group_id]
    if keep not in group.members:
        raise MissingPreferenceError(
            f"preferred member {keep!r} is not part of group {group.group_id!r}"
        )
    return keep


def apply_strategy(
    index: DatasetIndex,
    groups: Sequence[DuplicateGroup],
    strategy: DedupStrategy,
    preferences: Mapping[str, str] | None = None,
) -> DatasetIndex:
    """Reduce every duplicate group to a single kept member.

    Returns a new index; re-running detection on it (same threshold) finds
    no groups. ``preferences`` maps group id to the kept path and is
    required exactly for KEEP_PREFERRED.
    """
    removed: set[str] = set()
    for group in groups:
        keep = _kept_member(group, strategy, preferences)
        removed.update(m for m in group.members if m != keep)
    kept = tuple(e for e in index.entries if e.image_path not in removed)
    return DatasetIndex(root=index.root, entries=kept)


def audit_report(
    index: DatasetIndex,
    groups: Sequence[DuplicateGroup],
    hamming_threshold: int | None = None,
    preferences: Mapping[str, str] | None = None,
) -> dict:
    """JSON-ready audit: groups, annotation conflicts and removal previews.

    The preview for the preferred-member strategy appears only when a
    preference table is supplied. Output is deterministic for a given tree.
    """
    group_docs = []
    for g in groups:
        previews = {}
        for strategy in (DedupStrategy.DROP_FIRST, DedupStrategy.DROP_SECOND):
            keep = _kept_member(g, strategy, None)
            previews[strategy.value] = {
                "keep": [keep],
                "remove": [m for m in g.members if m != keep],
            }
        if preferences is not None and g.group_id in preferences:
            keep = _kept_member(g, DedupStrategy.KEEP_PREFERRED, preferences)
            previews[DedupStrategy.KEEP_PREFERRED.value] = {
                "keep": [keep],
                "remove": [m for m in g.members if m != keep],
            }
        else:
            previews[DedupStrategy.KEEP_PREFERRED.value] = None
        group_docs.append(
            {
                "group_id": g.group_id,
                "members": list(g.members),
                "pairwise_dice": [
                    {"a": p.a, "b": p.b, "dice": p.dice} for p in g.pairwise_dice
                ],
                "conflict": g.conflict,
                "larger_than_pair": g.larger_than_pair,
                "removal_preview": previews,
            }
        )
    doc = {
        "schema_version": AUDIT_SCHEMA_VERSION,
        "root": index.root,
        "entry_count": len(index.entries),
        "duplicate_group_count": len(groups),
        "groups": group_docs,
    }
    if hamming_threshold is not None:
        doc["hamming_threshold"] = hamming_threshold
    return doc


def read_preferences_csv(path: str | Path) -> dict[str, str]:
    """Read the ``group_id,keep_path`` preference table."""
    prefs: dict[str, str] = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"group_id", "keep_path"} <= set(
            reader.fieldnames
        ):
            raise MissingPreferenceError(
                f"{path}: preference CSV needs 'group_id,keep_path' columns"
            )
        for row in reader:
            prefs[row["group_id"]] = row["keep_path"]
    return prefs


def write_preferences_csv(prefs: Mapping[str, str], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["group_id", "keep_path"])
        for group_id in sorted(prefs):
            writer.writerow([group_id, prefs[group_id]])


def write_kept_manifest(index: DatasetIndex, path: str | Path) -> None:
    """One kept image path per line, in index order."""
    Path(path).write_text("".join(f"{p}\n" for p in index.entry_paths()))


def write_audit_json(doc: dict, path: str | Path) -> None:
    Path(path).write_text(json.dumps(doc, indent=2) + "\n")
