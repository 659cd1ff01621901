"""On-disk formats: ``.ten`` tensors, PGM images, checkpoints, atomic writes."""

from __future__ import annotations

import os
import struct
import tempfile
from contextlib import contextmanager
from pathlib import Path
from typing import Mapping

import numpy as np

MAGIC = b"ACAMTEN1"


class FormatError(ValueError):
    pass


@contextmanager
def atomic_open(path, mode: str = "wb"):
    """Write to a sibling temp file and rename over ``path`` on success."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, mode) as fh:
            yield fh
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def encode_ten(arr: np.ndarray) -> bytes:
    arr = np.asarray(arr)
    dims = arr.shape if arr.ndim else (1,)
    head = MAGIC + struct.pack("<I", len(dims)) + struct.pack(f"<{len(dims)}I", *dims)
    return head + np.ascontiguousarray(arr, dtype="<f4").tobytes()


def decode_ten(buf: bytes) -> np.ndarray:
    if buf[:8] != MAGIC:
        raise FormatError("not a .ten file (bad magic)")
    if len(buf) < 12:
        raise FormatError("truncated .ten header")
    (ndim,) = struct.unpack_from("<I", buf, 8)
    end = 12 + 4 * ndim
    if len(buf) < end:
        raise FormatError("truncated .ten header")
    dims = struct.unpack_from(f"<{ndim}I", buf, 12)
    n = int(np.prod(dims)) if ndim else 1
    if len(buf) != end + 4 * n:
        raise FormatError(f".ten payload has {len(buf) - end} bytes, expected {4 * n} for shape {dims}")
    return np.frombuffer(buf, dtype="<f4", offset=end).astype(np.float32).reshape(dims)


def save_ten(path, arr: np.ndarray) -> None:
    with atomic_open(path) as fh:
        fh.write(encode_ten(arr))


def load_ten(path) -> np.ndarray:
    return decode_ten(Path(path).read_bytes())


def save_pgm(path, img: np.ndarray) -> None:
    """8-bit binary PGM (P5), min-max scaled; a constant image maps to 255."""
    img = np.asarray(img, dtype=np.float64)
    if img.ndim != 2:
        raise FormatError(f"PGM needs a 2-D array, got shape {img.shape}")
    lo, hi = img.min(), img.max()
    if hi > lo:
        px = np.round((img - lo) / (hi - lo) * 255)
    else:
        px = np.full(img.shape, 255.0)
    h, w = img.shape
    with atomic_open(path) as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(px.astype(np.uint8).tobytes())


def save_label_pgm(path, labels: np.ndarray) -> None:
    """Label map written verbatim as 8-bit gray levels (no rescaling)."""
    labels = np.asarray(labels)
    h, w = labels.shape
    with atomic_open(path) as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(labels.astype(np.uint8).tobytes())


def load_pgm(path) -> np.ndarray:
    buf = Path(path).read_bytes()
    tokens = []
    pos = 0
    while len(tokens) < 4:
        while buf[pos:pos + 1].isspace():
            pos += 1
        start = pos
        while not buf[pos:pos + 1].isspace():
            pos += 1
        tokens.append(buf[start:pos].decode("ascii"))
    if tokens[0] != "P5":
        raise FormatError("not a binary PGM")
    w, h = int(tokens[1]), int(tokens[2])
    return np.frombuffer(buf, dtype=np.uint8, offset=pos + 1, count=w * h).reshape(h, w)


def save_checkpoint(directory, tensors: Mapping[str, np.ndarray], extra: Mapping[str, str] | None = None) -> None:
    """Directory of ``<name>.ten`` files plus ``manifest.txt`` (name -> shape)."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    lines = []
    for name, arr in tensors.items():
        save_ten(directory / f"{name}.ten", arr)
        lines.append(f"{name} {'x'.join(str(d) for d in np.shape(arr)) or '1'}")
    with atomic_open(directory / "manifest.txt", "w") as fh:
        fh.write("\n".join(lines) + "\n")
    for fname, text in (extra or {}).items():
        with atomic_open(directory / fname, "w") as fh:
            fh.write(text)


def load_checkpoint(directory) -> dict:
    directory = Path(directory)
    manifest = directory / "manifest.txt"
    if not manifest.exists():
        raise FileNotFoundError(f"no manifest.txt in {directory}")
    out = {}
    for line in manifest.read_text().splitlines():
        if not line.strip():
            continue
        name, shape = line.split()
        arr = load_ten(directory / f"{name}.ten")
        want = tuple(int(d) for d in shape.split("x"))
        if arr.shape != want and not (arr.shape == () and want == (1,)):
            raise FormatError(f"{name}: manifest says {want}, file holds {arr.shape}")
        out[name] = arr
    return out
