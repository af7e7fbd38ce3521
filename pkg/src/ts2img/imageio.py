"""Deterministic image and tensor serialisation.

PNG output is written directly (header, IHDR, one zlib IDAT, IEND) so the
bytes depend only on the pixel values: no timestamps, no ancillary chunks,
byte-identical on rerun. Tensors use the TSIM container: magic "TSIM",
little-endian u32 version and rank, one u64 per dimension, row-major
float32 payload, and a trailing CRC32 of the payload.
"""

from __future__ import annotations

import struct
import zlib
from pathlib import Path

import numpy as np

from .encode import GRAY_SINGLE, RGB_XYZ, ImageStack
from .errors import CorruptionError, DomainError, FormatError

TSIM_MAGIC = b"TSIM"
TSIM_VERSION = 1
_PNG_SIGNATURE = b"\x89PNG\r\n\x1a\n"
_ZLIB_LEVEL = 9  # fixed so identical pixels give identical bytes


def write_tensor(tensor, path) -> None:
    """Write an array as a TSIM file (values stored as float32)."""
    a = np.ascontiguousarray(tensor, dtype=np.float32)
    if not np.all(np.isfinite(a)):
        raise DomainError("tensor contains non-finite values")
    payload = a.astype("<f4", copy=False).tobytes(order="C")
    header = TSIM_MAGIC + struct.pack("<II", TSIM_VERSION, a.ndim)
    if a.ndim:
        header += struct.pack(f"<{a.ndim}Q", *a.shape)
    crc = zlib.crc32(payload) & 0xFFFFFFFF
    with open(path, "wb") as f:
        f.write(header)
        f.write(payload)
        f.write(struct.pack("<I", crc))


def read_tensor_header(path) -> tuple[int, tuple[int, ...]]:
    """Return (version, dims) from a TSIM header without reading the payload."""
    data = Path(path).read_bytes()
    version, dims, _ = _parse_header(data)
    return version, dims


def _parse_header(data: bytes):
    if len(data) < 12:
        raise FormatError("file too short to hold a TSIM header")
    if data[:4] != TSIM_MAGIC:
        raise FormatError(f"bad magic {data[:4]!r}, expected {TSIM_MAGIC!r}")
    version, ndim = struct.unpack_from("<II", data, 4)
    if version != TSIM_VERSION:
        raise FormatError(f"unsupported TSIM version {version}")
    offset = 12
    if len(data) < offset + 8 * ndim:
        raise FormatError("file truncated inside the dimension list")
    dims = struct.unpack_from(f"<{ndim}Q", data, offset) if ndim else ()
    return version, tuple(int(d) for d in dims), offset + 8 * ndim


def read_tensor(path) -> np.ndarray:
    """Read a TSIM file back into a float32 array, verifying its CRC."""
    data = Path(path).read_bytes()
    _, dims, offset = _parse_header(data)
    count = 1
    for d in dims:
        count *= d
    payload_len = count * 4
    if len(data) < offset + payload_len + 4:
        raise CorruptionError(
            f"payload truncated: need {payload_len + 4} bytes after the header, "
            f"have {len(data) - offset}"
        )
    if len(data) > offset + payload_len + 4:
        raise CorruptionError("trailing bytes after the payload CRC")
    payload = data[offset : offset + payload_len]
    (stored,) = struct.unpack_from("<I", data, offset + payload_len)
    actual = zlib.crc32(payload) & 0xFFFFFFFF
    if actual != stored:
        raise CorruptionError(
            f"payload CRC mismatch: stored {stored:#010x}, computed {actual:#010x}"
        )
    return np.frombuffer(payload, dtype="<f4").reshape(dims).astype(np.float32)


def quantize_plane(matrix, value_range) -> np.ndarray:
    """Map matrix values to uint8 pixels, rounding halves up.

    pixel = floor((v - lo) / (hi - lo) * 255 + 0.5), clipped to [0, 255].
    A value of 0 in a [-1, 1] plane lands on pixel 128.
    """
    lo, hi = value_range
    if not hi > lo:
        raise DomainError(f"invalid value range ({lo}, {hi})")
    scaled = (np.asarray(matrix, dtype=np.float64) - lo) / (hi - lo) * 255.0
    return np.clip(np.floor(scaled + 0.5), 0.0, 255.0).astype(np.uint8)


def render_png(stack: ImageStack, path) -> None:
    """Render a stack to an 8-bit PNG: rgb_xyz as RGB, gray_single as gray.

    The 4-plane layout has no PNG mapping and is rejected; write it as a
    tensor instead.
    """
    if stack.layout == RGB_XYZ:
        planes = [quantize_plane(p.matrix, p.value_range) for p in stack.planes]
        img = np.stack(planes, axis=-1)
    elif stack.layout == GRAY_SINGLE:
        img = quantize_plane(stack.planes[0].matrix, stack.planes[0].value_range)
    else:
        raise DomainError(
            f"layout {stack.layout!r} has no PNG rendering; rgb_xyz and "
            "gray_single are supported"
        )
    Path(path).write_bytes(png_bytes(img))


def png_bytes(img: np.ndarray) -> bytes:
    """Encode a [h, w] grayscale or [h, w, 3] RGB uint8 array as PNG bytes."""
    a = np.ascontiguousarray(img, dtype=np.uint8)
    if a.ndim == 2:
        color_type = 0
    elif a.ndim == 3 and a.shape[2] == 3:
        color_type = 2
    else:
        raise DomainError(f"cannot encode shape {a.shape} as PNG")
    h, w = a.shape[:2]
    raw = b"".join(b"\x00" + a[row].tobytes() for row in range(h))
    ihdr = struct.pack(">IIBBBBB", w, h, 8, color_type, 0, 0, 0)
    idat = zlib.compress(raw, _ZLIB_LEVEL)
    return (
        _PNG_SIGNATURE
        + _png_chunk(b"IHDR", ihdr)
        + _png_chunk(b"IDAT", idat)
        + _png_chunk(b"IEND", b"")
    )


def _png_chunk(tag: bytes, data: bytes) -> bytes:
    crc = zlib.crc32(tag + data) & 0xFFFFFFFF
    return struct.pack(">I", len(data)) + tag + data + struct.pack(">I", crc)
