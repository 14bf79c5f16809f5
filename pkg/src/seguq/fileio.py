"""On-disk formats: the PMAP prediction container, masks and map exports.

PMAP layout (all integers little-endian):

    offset  size  field
    0       6     magic ``PMAP1\\0``
    6       2     u16 container version, currently 1
    8       4     u32 K   (ensemble members)
    12      4     u32 T   (stochastic passes per member)
    16      4     u32 H   (rows)
    20      4     u32 W   (columns)
    24      ...   K*T*H*W IEEE-754 float32 values, ordered [k][t][row][col]
                  row-major

Bytes beyond the declared payload are ignored. Masks are 8-bit grayscale
PGM (P5) or PNG files; any nonzero intensity is foreground. Mean maps and
uncertainty maps can be dumped as headerless row-major float32 files whose
dimensions travel in a JSON sidecar, or (for mean maps) as a PMAP with
K=T=1. Uncertainty maps can also be rendered as 16-bit PGM with the linear
scale [0, ln 2] -> [0, 65535].
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .datamodel import LN2, MAX_ELEMENTS, BinaryMask, ProbabilityMap, SampleStack
from .errors import (
    BadMagicError,
    DimensionOverflowError,
    TruncatedFileError,
    UnsupportedFormatError,
)

PMAP_MAGIC = b"PMAP1\x00"
PMAP_VERSION = 1
_HEADER = struct.Struct("<6sHIIII")

SIDECAR_SCHEMA_VERSION = 1


def read_sample_stack(path: str | Path, case_id: str | None = None) -> SampleStack:
    """Read and fully validate a PMAP file.

    ``case_id`` defaults to the file stem. Raises BadMagicError,
    TruncatedFileError, DimensionOverflowError or ValueOutOfRangeError; a
    validation failure never yields a stack.
    """
    path = Path(path)
    data = path.read_bytes()
    if len(data) < 6 or data[:6] != PMAP_MAGIC:
        raise BadMagicError(f"{path}: not a PMAP file (bad magic)")
    if len(data) < _HEADER.size:
        raise TruncatedFileError(f"{path}: header truncated at {len(data)} bytes")
    _, version, k, t, h, w = _HEADER.unpack_from(data)
    if version != PMAP_VERSION:
        raise UnsupportedFormatError(f"{path}: unsupported container version {version}")
    if min(k, t, h, w) < 1 or k * t * h * w > MAX_ELEMENTS:
        raise DimensionOverflowError(f"{path}: bad dimensions K={k} T={t} H={h} W={w}")
    count = k * t * h * w
    need = _HEADER.size + 4 * count
    if len(data) < need:
        raise TruncatedFileError(
            f"{path}: payload truncated, expected {need} bytes, found {len(data)}"
        )
    values = np.frombuffer(data, dtype="<f4", count=count, offset=_HEADER.size)
    return SampleStack(values.reshape(k, t, h, w), case_id=case_id or path.stem)


def write_sample_stack(stack: SampleStack, path: str | Path) -> None:
    """Write the bit-exact PMAP layout; read-back equality holds."""
    path = Path(path)
    header = _HEADER.pack(
        PMAP_MAGIC, PMAP_VERSION, stack.k, stack.t, stack.height, stack.width
    )
    payload = np.ascontiguousarray(stack.values, dtype="<f4").tobytes()
    path.write_bytes(header + payload)


def read_mask(path: str | Path) -> BinaryMask:
    """Read an 8-bit grayscale PGM or PNG; intensity > 0 is foreground."""
    path = Path(path)
    try:
        with Image.open(path) as img:
            if img.format not in ("PNG", "PPM"):
                raise UnsupportedFormatError(
                    f"{path}: mask must be PGM or PNG, got {img.format}"
                )
            if img.mode not in ("1", "L"):
                raise UnsupportedFormatError(
                    f"{path}: mask must be 8-bit grayscale, got mode {img.mode}"
                )
            arr = np.asarray(img.convert("L"))
    except UnidentifiedImageError as exc:
        raise UnsupportedFormatError(f"{path}: cannot decode image") from exc
    return BinaryMask(arr > 0)


def write_mask_pgm(mask: BinaryMask, path: str | Path) -> None:
    """Write a mask as binary PGM (P5, maxval 255); foreground becomes 255."""
    path = Path(path)
    header = f"P5\n{mask.width} {mask.height}\n255\n".encode("ascii")
    payload = np.where(mask.values, 255, 0).astype(np.uint8).tobytes()
    path.write_bytes(header + payload)


def write_uncertainty_pgm(
    field: np.ndarray, path: str | Path, full_scale: float = LN2
) -> None:
    """Render an uncertainty field as 16-bit PGM, [0, full_scale] -> [0, 65535].

    The default full scale is ln 2, the entropy ceiling in nats; callers
    holding bit-valued fields pass 1.0 so the rendered image is unchanged.
    Sample values are big-endian per the PGM convention for maxval > 255.
    """
    arr = np.asarray(field, dtype=np.float64)
    if arr.ndim != 2:
        raise DimensionOverflowError(f"expected a 2-d field, got shape {arr.shape}")
    scaled = np.clip(arr, 0.0, full_scale) * (65535.0 / full_scale)
    pixels = np.rint(scaled).astype(">u2")
    header = f"P5\n{arr.shape[1]} {arr.shape[0]}\n65535\n".encode("ascii")
    Path(path).write_bytes(header + pixels.tobytes())


def _sidecar_path(path: Path) -> Path:
    return path.with_suffix(".json")


def write_float32_raw(
    field: np.ndarray, path: str | Path, extra: dict | None = None
) -> None:
    """Dump a 2-d field as headerless row-major little-endian float32.

    Height/width (and any ``extra`` entries, e.g. units) go into a JSON
    sidecar next to the file.
    """
    path = Path(path)
    arr = np.asarray(field)
    if arr.ndim != 2:
        raise DimensionOverflowError(f"expected a 2-d field, got shape {arr.shape}")
    path.write_bytes(np.ascontiguousarray(arr, dtype="<f4").tobytes())
    sidecar = {
        "schema_version": SIDECAR_SCHEMA_VERSION,
        "height": int(arr.shape[0]),
        "width": int(arr.shape[1]),
        "dtype": "float32",
        "order": "row-major",
        "byte_order": "little",
    }
    if extra:
        sidecar.update(extra)
    _sidecar_path(path).write_text(json.dumps(sidecar, indent=2) + "\n")


def read_float32_raw(path: str | Path) -> np.ndarray:
    """Read a raw float32 dump using its JSON sidecar for dimensions."""
    path = Path(path)
    sidecar = json.loads(_sidecar_path(path).read_text())
    h, w = int(sidecar["height"]), int(sidecar["width"])
    data = path.read_bytes()
    if len(data) < 4 * h * w:
        raise TruncatedFileError(
            f"{path}: expected {4 * h * w} bytes for {h}x{w}, found {len(data)}"
        )
    return np.frombuffer(data, dtype="<f4", count=h * w).reshape(h, w)


def write_probability_map(
    pmap: ProbabilityMap, path: str | Path, extra: dict | None = None
) -> None:
    """Write a mean map; ``.pmap`` gives a K=T=1 container, ``.f32`` a raw dump."""
    path = Path(path)
    if path.suffix == ".pmap":
        stack = SampleStack(
            pmap.values.astype(np.float32).reshape(1, 1, *pmap.values.shape),
            case_id=path.stem,
        )
        write_sample_stack(stack, path)
    elif path.suffix == ".f32":
        write_float32_raw(pmap.values, path, extra=extra)
    else:
        raise UnsupportedFormatError(
            f"{path}: mean maps support .pmap or .f32, got {path.suffix!r}"
        )


def read_probability_map(path: str | Path) -> ProbabilityMap:
    """Read a mean map from either export format."""
    path = Path(path)
    if path.suffix == ".pmap":
        stack = read_sample_stack(path)
        flat = stack.samples()
        return ProbabilityMap(np.mean(flat, axis=0, dtype=np.float64))
    if path.suffix == ".f32":
        return ProbabilityMap(read_float32_raw(path).astype(np.float64))
    raise UnsupportedFormatError(f"{path}: expected a .pmap or .f32 map")


def read_u16_pgm(path: str | Path) -> np.ndarray:
    """Parse a 16-bit binary PGM written by this toolkit; returns uint16."""
    data = Path(path).read_bytes()
    parts = data.split(b"\n", 3)
    if len(parts) < 4 or parts[0] != b"P5":
        raise UnsupportedFormatError(f"{path}: not a binary PGM")
    w, h = (int(x) for x in parts[1].split())
    maxval = int(parts[2])
    if maxval != 65535:
        raise UnsupportedFormatError(f"{path}: expected maxval 65535, got {maxval}")
    pixels = np.frombuffer(parts[3], dtype=">u2", count=h * w)
    return pixels.reshape(h, w).astype(np.uint16)
