"""Grayscale PGM images (P2/P5, maxval 255) and CSV vectors."""

from __future__ import annotations

import numpy as np

__all__ = ["load_pgm", "save_pgm", "load_csv_vector", "save_csv_vector"]


def save_pgm(path, image, binary: bool = True) -> None:
    """Write an 8-bit grayscale image as P5 (binary) or P2 (ASCII)."""
    image = np.asarray(image)
    if image.ndim != 2 or image.size == 0:
        raise ValueError("expected a non-empty 2-D image")
    values = np.asarray(image, dtype=float)
    if np.any(~np.isfinite(values)) or np.any(values < 0) or np.any(values > 255):
        raise ValueError("pixel values must lie in [0, 255]")
    if np.any(values != np.round(values)):
        raise ValueError("pixel values must be integers")
    pixels = values.astype(np.uint8)
    h, w = pixels.shape
    if binary:
        with open(path, "wb") as fh:
            fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
            fh.write(pixels.tobytes())
    else:
        lines = [f"P2\n{w} {h}\n255"]
        for row in pixels:
            lines.append(" ".join(str(int(v)) for v in row))
        with open(path, "w", newline="\n") as fh:
            fh.write("\n".join(lines) + "\n")


def _read_tokens(data: bytes, count: int, start: int) -> tuple[list[bytes], int]:
    """Read whitespace-separated header tokens, skipping '#' comments."""
    tokens: list[bytes] = []
    i = start
    while len(tokens) < count:
        while i < len(data) and data[i : i + 1].isspace():
            i += 1
        if i >= len(data):
            raise ValueError("truncated PGM header")
        if data[i : i + 1] == b"#":
            while i < len(data) and data[i : i + 1] != b"\n":
                i += 1
            continue
        j = i
        while j < len(data) and not data[j : j + 1].isspace():
            j += 1
        tokens.append(data[i:j])
        i = j
    return tokens, i


def load_pgm(path) -> np.ndarray:
    """Read a P2 or P5 grayscale image; only maxval 255 is supported."""
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < 2:
        raise ValueError("not a PGM file")
    magic = data[:2]
    if magic not in (b"P2", b"P5"):
        raise ValueError(f"unsupported magic {magic!r}")
    tokens, pos = _read_tokens(data, 3, 2)
    try:
        w, h, maxval = (int(t) for t in tokens)
    except ValueError as exc:
        raise ValueError("malformed PGM header") from exc
    if w < 1 or h < 1:
        raise ValueError("malformed PGM dimensions")
    if maxval != 255:
        raise ValueError(f"unsupported maxval {maxval} (only 255)")
    if magic == b"P5":
        # Exactly one whitespace byte separates the header from raster data.
        pos += 1
        raster = data[pos : pos + w * h]
        if len(raster) != w * h:
            raise ValueError("truncated PGM raster")
        return np.frombuffer(raster, dtype=np.uint8).reshape(h, w).copy()
    values = data[pos:].split()
    if len(values) != w * h:
        raise ValueError("wrong number of ASCII samples")
    pixels = np.array([int(v) for v in values], dtype=np.int64)
    if pixels.min() < 0 or pixels.max() > 255:
        raise ValueError("sample out of range")
    return pixels.astype(np.uint8).reshape(h, w)


def save_csv_vector(path, x) -> None:
    """One value per line, 17 significant digits, LF line endings."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ValueError("expected a 1-D vector")
    with open(path, "w", newline="\n") as fh:
        for v in x:
            fh.write(f"{v:.17g}\n")


def load_csv_vector(path) -> np.ndarray:
    with open(path, "r") as fh:
        lines = [line.strip() for line in fh if line.strip()]
    try:
        return np.array([float(v) for v in lines], dtype=float)
    except ValueError as exc:
        raise ValueError("malformed CSV vector") from exc
