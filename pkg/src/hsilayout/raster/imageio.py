"""Binary PGM masks and PFM depth maps."""

from __future__ import annotations

from pathlib import Path

import numpy as np


def write_pgm(mask: np.ndarray, path) -> None:
    m = (np.asarray(mask) > 0).astype(np.uint8) * 255
    h, w = m.shape
    Path(path).write_bytes(f"P5\n{w} {h}\n255\n".encode("ascii") + m.tobytes())


def _tokens(data: bytes, count: int):
    """Read ``count`` whitespace-separated header tokens, skipping comments."""
    out, i = [], 0
    while len(out) < count:
        while data[i:i + 1].isspace():
            i += 1
        if data[i:i + 1] == b"#":
            while data[i:i + 1] not in (b"\n", b""):
                i += 1
            continue
        j = i
        while not data[j:j + 1].isspace():
            j += 1
        out.append(data[i:j].decode("ascii"))
        i = j
    return out, i + 1


def read_pgm(path) -> np.ndarray:
    """Binary mask from a P5 file, thresholded at 128."""
    data = Path(path).read_bytes()
    (magic, w, h, maxval), off = _tokens(data, 4)
    if magic != "P5":
        raise ValueError(f"{path}: not a binary PGM")
    w, h, maxval = int(w), int(h), int(maxval)
    dtype = np.uint8 if maxval < 256 else np.dtype(">u2")
    img = np.frombuffer(data, dtype=dtype, count=w * h, offset=off).reshape(h, w)
    return (img.astype(np.float64) * (255.0 / maxval) >= 128).astype(np.uint8)


def write_pfm(depth: np.ndarray, path) -> None:
    d = np.asarray(depth, dtype="<f4")
    h, w = d.shape
    # PFM stores rows bottom to top; negative scale marks little-endian
    Path(path).write_bytes(f"Pf\n{w} {h}\n-1.0\n".encode("ascii") + np.flipud(d).tobytes())


def read_pfm(path) -> np.ndarray:
    data = Path(path).read_bytes()
    (magic, w, h, scale), off = _tokens(data, 4)
    if magic != "Pf":
        raise ValueError(f"{path}: only single-channel PFM is supported")
    w, h = int(w), int(h)
    dtype = "<f4" if float(scale) < 0 else ">f4"
    d = np.frombuffer(data, dtype=dtype, count=w * h, offset=off).reshape(h, w)
    return np.flipud(d).astype(np.float64)
