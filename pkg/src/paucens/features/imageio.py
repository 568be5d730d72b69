"""Image files: binary PGM/PPM (P5/P6) and a raw planar float32 format.

Raw format: the 4-byte magic ``PRAW``, then three little-endian uint32
values ``channels, height, width``, then ``channels * height * width``
little-endian float32 values, plane by plane.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from ..errors import DataError

__all__ = ["read_image", "write_pnm", "read_pnm", "read_raw", "write_raw"]

RAW_MAGIC = b"PRAW"


def _pnm_tokens(data: bytes, count: int):
    tokens, pos = [], 0
    while len(tokens) < count:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise DataError("truncated PNM header")
        tokens.append(data[start:pos])
    return tokens, pos + 1


def read_pnm(path) -> np.ndarray:
    """Read a binary PGM (H, W) or PPM (H, W, 3) as float64 on a 0..255 scale.

    16-bit files (maxval > 255) are rescaled to 0..255.
    """
    data = Path(path).read_bytes()
    try:
        (magic, w, h, maxval), offset = _pnm_tokens(data, 4)
        w, h, maxval = int(w), int(h), int(maxval)
    except (ValueError, IndexError) as exc:
        raise DataError(f"{path}: malformed PNM header") from exc
    if magic not in (b"P5", b"P6"):
        raise DataError(f"{path}: unsupported PNM type {magic!r}; need P5 or P6")
    if not (0 < maxval < 65536) or w < 1 or h < 1:
        raise DataError(f"{path}: bad PNM size or maxval")
    ch = 1 if magic == b"P5" else 3
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
    count = w * h * ch
    body = data[offset : offset + count * dtype.itemsize]
    if len(body) < count * dtype.itemsize:
        raise DataError(f"{path}: truncated pixel data")
    arr = np.frombuffer(body, dtype=dtype).astype(np.float64) * (255.0 / maxval)
    return arr.reshape(h, w) if ch == 1 else arr.reshape(h, w, 3)


def write_pnm(path, image) -> None:
    """Write an 8-bit PGM or PPM; values are rounded and clipped to 0..255."""
    img = np.asarray(image, dtype=np.float64)
    if img.ndim == 2:
        magic = b"P5"
    elif img.ndim == 3 and img.shape[2] == 3:
        magic = b"P6"
    else:
        raise DataError(f"cannot write image of shape {img.shape} as PNM")
    h, w = img.shape[:2]
    pix = np.clip(np.rint(img), 0, 255).astype(np.uint8)
    Path(path).write_bytes(magic + b"\n%d %d\n255\n" % (w, h) + pix.tobytes())


def read_raw(path) -> np.ndarray:
    data = Path(path).read_bytes()
    if data[:4] != RAW_MAGIC or len(data) < 16:
        raise DataError(f"{path}: not a raw planar image")
    c, h, w = struct.unpack("<3I", data[4:16])
    need = 16 + 4 * c * h * w
    if c not in (1, 3) or len(data) != need:
        raise DataError(f"{path}: raw header says {c}x{h}x{w} but size is {len(data)} bytes")
    planes = np.frombuffer(data[16:], dtype="<f4").astype(np.float64).reshape(c, h, w)
    return planes[0] if c == 1 else np.moveaxis(planes, 0, -1)


def write_raw(path, image) -> None:
    img = np.asarray(image, dtype=np.float64)
    planes = img[None] if img.ndim == 2 else np.moveaxis(img, -1, 0)
    c, h, w = planes.shape
    Path(path).write_bytes(RAW_MAGIC + struct.pack("<3I", c, h, w) + planes.astype("<f4").tobytes())


def read_image(path) -> np.ndarray:
    """Dispatch on file content: PNM or raw planar."""
    with open(path, "rb") as fh:
        head = fh.read(4)
    if head == RAW_MAGIC:
        return read_raw(path)
    if head[:2] in (b"P5", b"P6"):
        return read_pnm(path)
    raise DataError(f"{path}: unrecognised image format")
