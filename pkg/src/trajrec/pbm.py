"""Plain (P1) and raw (P4) portable bitmap files; 1 is ink."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .skeleton import SkeletonImage


def _tokens(data: bytes, start: int, count: int) -> tuple[list[bytes], int]:
    out: list[bytes] = []
    i = start
    while len(out) < count:
        while i < len(data) and data[i : i + 1].isspace():
            i += 1
        if i < len(data) and data[i : i + 1] == b"#":
            while i < len(data) and data[i : i + 1] not in (b"\n", b"\r"):
                i += 1
            continue
        j = i
        while j < len(data) and not data[j : j + 1].isspace() and data[j : j + 1] != b"#":
            j += 1
        if j == i:
            raise ValueError("truncated PBM header")
        out.append(data[i:j])
        i = j
    return out, i


def decode_pbm(data: bytes) -> SkeletonImage:
    magic = data[:2]
    if magic not in (b"P1", b"P4"):
        raise ValueError(f"not a PBM file (magic {magic!r})")
    (w, h), pos = _tokens(data, 2, 2)
    width, height = int(w), int(h)
    if width < 1 or height < 1:
        raise ValueError(f"invalid PBM size {width}x{height}")
    if magic == b"P4":
        pos += 1  # single whitespace byte after the header
        row_bytes = (width + 7) // 8
        raw = np.frombuffer(data[pos : pos + row_bytes * height], dtype=np.uint8)
        if raw.size != row_bytes * height:
            raise ValueError("truncated P4 raster")
        bits = np.unpackbits(raw.reshape(height, row_bytes), axis=1)[:, :width]
        return SkeletonImage(bits.astype(bool))
    # plain rasters may carry comments; drop them line by line
    lines = [ln.split(b"#", 1)[0] for ln in data[pos:].splitlines()]
    body = bytes(b for ln in lines for b in ln if b in b"01")
    if len(body) < width * height:
        raise ValueError("truncated P1 raster")
    grid = np.frombuffer(body[: width * height], dtype=np.uint8).reshape(height, width) == ord("1")
    return SkeletonImage(grid)


def encode_pbm(image: SkeletonImage, plain: bool = False) -> bytes:
    h, w = image.pixels.shape
    if plain:
        rows = [" ".join("1" if v else "0" for v in row) for row in image.pixels]
        return f"P1\n{w} {h}\n".encode() + "\n".join(rows).encode() + b"\n"
    packed = np.packbits(image.pixels.astype(np.uint8), axis=1)
    return f"P4\n{w} {h}\n".encode() + packed.tobytes()


def read_pbm(path: str | Path) -> SkeletonImage:
    try:
        return decode_pbm(Path(path).read_bytes())
    except ValueError as exc:
        raise ValueError(f"{path}: {exc}") from None


def write_pbm(image: SkeletonImage, path: str | Path, plain: bool = False) -> None:
    Path(path).write_bytes(encode_pbm(image, plain))
