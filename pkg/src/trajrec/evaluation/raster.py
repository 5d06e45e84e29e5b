"""On-line trajectories and their 8-connected one-pixel-wide rasterization."""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from ..skeleton import Pixel, SkeletonImage, are_adjacent


@dataclass(frozen=True)
class OnlineTrajectory:
    """Pen-down strokes as (x, y) point arrays, in writing order."""

    strokes: tuple[np.ndarray, ...]

    def __post_init__(self) -> None:
        cleaned = []
        for i, s in enumerate(self.strokes):
            arr = np.asarray(s, dtype=float).reshape(-1, 2)
            if len(arr) < 2:
                raise ValueError(f"stroke {i} has {len(arr)} point(s); at least 2 are needed")
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"stroke {i} has non-finite coordinates")
            cleaned.append(arr)
        if not cleaned:
            raise ValueError("trajectory has no strokes")
        object.__setattr__(self, "strokes", tuple(cleaned))

    @classmethod
    def from_lists(cls, strokes: Sequence[Sequence[tuple[float, float]]]) -> "OnlineTrajectory":
        return cls(tuple(np.asarray(s, dtype=float) for s in strokes))


def bresenham(a: Pixel, b: Pixel) -> list[Pixel]:
    """Integer line from ``a`` to ``b`` inclusive, as (row, col) pixels.

    The line is always drawn from the lexicographically smaller end so that
    a->b and b->a cover the same pixels.
    """
    if b < a:
        return bresenham(b, a)[::-1]
    (y0, x0), (y1, x1) = a, b
    dx, dy = abs(x1 - x0), -abs(y1 - y0)
    sx = 1 if x0 < x1 else -1
    sy = 1 if y0 < y1 else -1
    err = dx + dy
    out = []
    x, y = x0, y0
    while True:
        out.append((y, x))
        if x == x1 and y == y1:
            return out
        e2 = 2 * err
        if e2 >= dy:
            err += dy
            x += sx
        if e2 <= dx:
            err += dx
            y += sy


def thin_corners(seq: Sequence[Pixel]) -> list[Pixel]:
    """Drop pixels whose predecessor and successor already touch (staircase corners)."""
    out = list(seq)
    changed = True
    while changed:
        changed = False
        i = 1
        while i < len(out) - 1:
            if are_adjacent(out[i - 1], out[i + 1]):
                del out[i]
                changed = True
            else:
                i += 1
    return out


def _dedupe(seq: Sequence[Pixel]) -> list[Pixel]:
    out: list[Pixel] = []
    for p in seq:
        if not out or out[-1] != p:
            out.append(p)
    return out


def rasterize(traj: OnlineTrajectory, scale: float = 1.0, margin: int = 2) -> tuple[SkeletonImage, list[list[Pixel]]]:
    """Draw every stroke with Bresenham segments.

    Returns the skeleton image and, per stroke, the pixel sequence in
    drawing order (the aligned ground truth).
    """
    pts = np.concatenate(traj.strokes) * scale
    lo = np.floor(pts.min(axis=0))
    extent = np.round(pts.max(axis=0) - lo)
    if extent.max() == 0:
        raise ValueError("degenerate trajectory: zero extent")
    strokes = []
    for s in traj.strokes:
        xy = np.round(s * scale - lo).astype(int) + margin
        pixels = [(int(y), int(x)) for x, y in xy]
        seq: list[Pixel] = [pixels[0]]
        for p, q in zip(pixels, pixels[1:]):
            seq.extend(bresenham(p, q)[1:])
        seq = thin_corners(_dedupe(seq))
        if len(seq) < 2:
            raise ValueError("degenerate stroke: rasterizes to a single pixel")
        strokes.append(seq)
    shape = (int(extent[1]) + 2 * margin + 1, int(extent[0]) + 2 * margin + 1)
    grid = np.zeros(shape, dtype=bool)
    for seq in strokes:
        for r, c in seq:
            grid[r, c] = True
    return SkeletonImage(grid), strokes


def read_trajectory(path: str | Path) -> OnlineTrajectory:
    """Parse ``stroke_index x y`` lines; strokes keep their order of first appearance."""
    strokes: dict[str, list[tuple[float, float]]] = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 3:
            raise ValueError(f"{path}:{lineno}: expected 'stroke_index x y', got {line!r}")
        try:
            x, y = float(parts[1]), float(parts[2])
        except ValueError:
            raise ValueError(f"{path}:{lineno}: non-numeric coordinate in {line!r}") from None
        if not (math.isfinite(x) and math.isfinite(y)):
            raise ValueError(f"{path}:{lineno}: non-finite coordinate")
        strokes.setdefault(parts[0], []).append((x, y))
    if not strokes:
        raise ValueError(f"{path}: no points")
    try:
        return OnlineTrajectory.from_lists(list(strokes.values()))
    except ValueError as exc:
        raise ValueError(f"{path}: {exc}") from None


def write_trajectory(traj: OnlineTrajectory, path: str | Path) -> None:
    lines = [f"{i} {x:.6g} {y:.6g}" for i, s in enumerate(traj.strokes) for x, y in s]
    Path(path).write_text("\n".join(lines) + "\n")
