"""Image and map I/O: 8-bit grayscale PNG, float32 PFM, atomic writes."""

from __future__ import annotations

import hashlib
import os
import tempfile
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import ParseError


def read_gray(path: str | Path) -> np.ndarray:
    """Load an image as 8-bit grayscale (H, W) uint8."""
    with Image.open(path) as img:
        return np.asarray(img.convert("L"), dtype=np.uint8)


def write_gray(path: str | Path, img: np.ndarray) -> None:
    """Write an (H, W) uint8 array as a grayscale PNG, atomically."""
    arr = np.ascontiguousarray(img, dtype=np.uint8)
    if arr.ndim != 2:
        raise ValueError(f"expected a 2-d grayscale array, got shape {arr.shape}")

    def _save(f):
        Image.fromarray(arr, mode="L").save(f, format="PNG")

    atomic_write(path, _save)


def read_pfm(path: str | Path) -> np.ndarray:
    """Read a single-channel PFM file as a float32 (H, W) array.

    PFM stores rows bottom-up; a negative scale marks little-endian data.
    """
    with open(path, "rb") as f:
        header = f.readline().rstrip()
        if header == b"Pf":
            channels = 1
        elif header == b"PF":
            channels = 3
        else:
            raise ParseError(f"{path}: not a PFM file (header {header!r})")
        dims = f.readline().split()
        if len(dims) != 2:
            raise ParseError(f"{path}: malformed PFM dimensions line")
        try:
            width, height = int(dims[0]), int(dims[1])
            scale = float(f.readline().strip())
        except ValueError as exc:
            raise ParseError(f"{path}: malformed PFM header: {exc}") from exc
        if width <= 0 or height <= 0:
            raise ParseError(f"{path}: bad PFM dimensions {width}x{height}")
        endian = "<" if scale < 0 else ">"
        count = width * height * channels
        data = np.fromfile(f, dtype=endian + "f4", count=count)
        if data.size != count:
            raise ParseError(f"{path}: truncated PFM data")
    data = data.reshape(height, width, channels) if channels == 3 else data.reshape(
        height, width
    )
    if channels == 3:
        data = data.mean(axis=2, dtype=np.float32)
    return np.flipud(data).astype(np.float32, copy=True)


def write_pfm(path: str | Path, arr: np.ndarray) -> None:
    """Write a float32 (H, W) array as a little-endian PFM, atomically."""
    data = np.asarray(arr, dtype=np.float32)
    if data.ndim != 2:
        raise ValueError(f"expected a 2-d array, got shape {data.shape}")
    h, w = data.shape

    def _save(f):
        f.write(b"Pf\n")
        f.write(f"{w} {h}\n".encode("ascii"))
        f.write(b"-1.0\n")
        f.write(np.flipud(data).astype("<f4").tobytes())

    atomic_write(path, _save)


def atomic_write(path: str | Path, writer) -> None:
    """Call ``writer(file_object)`` on a temp file, then rename into place.

    The destination either keeps its previous content or holds the
    complete new content; a crash mid-write never leaves a partial file.
    """
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as f:
            writer(f)
            f.flush()
            os.fsync(f.fileno())
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def write_bytes_atomic(path: str | Path, payload: bytes) -> None:
    """Write raw bytes atomically."""
    atomic_write(path, lambda f: f.write(payload))


def sha256_of_file(path: str | Path) -> str:
    """Hex sha256 digest of a file's content."""
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()
