"""Branch direction estimates, curvature and shortest paths inside clusters.

Angles are in degrees with x = column (rightward) and y = row (downward),
computed as ``atan2(dy, dx)`` and normalized to [-180, 180).
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .skeleton import Pixel

STRAIGHT_COST = 2
OBLIQUE_COST = 3


class UndefinedAngleError(ValueError):
    pass


def normalize_angle(deg: float) -> float:
    out = (deg + 180.0) % 360.0 - 180.0
    # float modulo can land exactly on +180 for inputs a hair below -180
    return -180.0 if out >= 180.0 else out


def fold(diff: float) -> float:
    """Absolute angular difference folded into [0, 180]."""
    d = abs(diff) % 360.0
    return 360.0 - d if d > 180.0 else d


def circular_mean(angles: Iterable[float]) -> float:
    s = c = 0.0
    n = 0
    for a in angles:
        rad = math.radians(a)
        s += math.sin(rad)
        c += math.cos(rad)
        n += 1
    if n == 0:
        raise UndefinedAngleError("circular mean of an empty list")
    if math.hypot(s, c) < 1e-12:
        raise UndefinedAngleError("undefined circular mean (zero resultant)")
    return normalize_angle(math.degrees(math.atan2(s, c)))


def _direction(dy: float, dx: float) -> float:
    return normalize_angle(math.degrees(math.atan2(dy, dx)))


def _resample(seq: list[float], length: int) -> list[float]:
    """Linear interpolation of an angle sequence onto ``length`` samples.

    The sequence is unwrapped first so interpolation never sweeps across
    the +/-180 seam; the samples stay between its min and max.
    """
    if len(seq) == 1:
        return seq * length
    unwrapped = np.unwrap(np.asarray(seq, dtype=float), period=360.0)
    grid = np.linspace(0.0, len(seq) - 1, length)
    return np.interp(grid, np.arange(len(seq)), unwrapped).tolist()


def external_angle(anchor: Pixel, points: Sequence[Pixel], scales: int) -> float:
    """Multiscale direction of a branch, pointing from the branch into the cluster."""
    if not points:
        raise UndefinedAngleError("no external direction: empty branch")
    points = list(points)[:scales]
    per_scale = []
    for s in range(1, scales + 1):
        prev = anchor
        seq = []
        for i in range(0, len(points), s):
            p = points[i]
            seq.append(_direction(prev[0] - p[0], prev[1] - p[1]))
            prev = p
        per_scale.append(circular_mean(_resample(seq, scales)))
    return circular_mean(per_scale)


def internal_angle(center: tuple[float, float], points: Sequence[Pixel], n_points: int | None = None) -> float:
    """Mean direction from the branch's trace points to the cluster's centre of gravity."""
    pts = list(points) if n_points is None else list(points)[:n_points]
    angles = []
    for r, c in pts:
        vy, vx = center[0] - r, center[1] - c
        if vx == 0 and vy == 0:
            continue
        angles.append(_direction(vy, vx))
    if not angles:
        raise UndefinedAngleError("every trace point coincides with the centre of gravity")
    return circular_mean(angles)


def _backward(a: Pixel, b: Pixel) -> float:
    """Direction of the vector b -> a."""
    return _direction(a[0] - b[0], a[1] - b[1])


def curvature(path: Sequence[Pixel], n_points: int) -> float:
    """Largest turn (degrees, 0..180) between tangents at equidistant samples of ``path``."""
    m = len(path)
    if m == 0:
        raise ValueError("curvature of an empty path")
    if m <= 2:
        return 0.0
    n = min(n_points, m)
    idx = np.floor(np.linspace(1, m, n)).astype(int) - 1
    pts = [path[i] for i in idx]
    rho = []
    for l in range(n):
        per_window = []
        for a in range(1, n_points + 1):
            v = [_backward(pts[l - b], pts[l]) for b in range(1, min(l, a) + 1)]
            v += [_backward(pts[l], pts[l + f]) for f in range(1, min(n - 1 - l, a) + 1)]
            try:
                per_window.append(circular_mean(v))
            except UndefinedAngleError:
                continue
        if per_window:
            try:
                rho.append(circular_mean(per_window))
            except UndefinedAngleError:
                continue
    if len(rho) < 2:
        return 0.0
    return max(fold(b - a) for a, b in zip(rho, rho[1:]))


@dataclass(frozen=True)
class ClusterGraph:
    """Adjacency of a cluster's pixels: 2 for straight neighbours, 3 for diagonal."""

    nodes: tuple[Pixel, ...]
    adjacency: np.ndarray

    @classmethod
    def from_pixels(cls, pixels: Iterable[Pixel]) -> "ClusterGraph":
        nodes = tuple(sorted(set(pixels)))
        p = len(nodes)
        adj = np.zeros((p, p), dtype=np.int8)
        index = {q: i for i, q in enumerate(nodes)}
        for i, (r, c) in enumerate(nodes):
            for dr in (-1, 0, 1):
                for dc in (-1, 0, 1):
                    j = index.get((r + dr, c + dc))
                    if j is None or j == i:
                        continue
                    adj[i, j] = OBLIQUE_COST if dr and dc else STRAIGHT_COST
        adj.flags.writeable = False
        return cls(nodes=nodes, adjacency=adj)

    def index(self, p: Pixel) -> int:
        try:
            return self.nodes.index(p)
        except ValueError:
            raise KeyError(f"{p} is not a node of this cluster") from None

    def path_cost(self, path: Sequence[Pixel]) -> int:
        total = 0
        for a, b in zip(path, path[1:]):
            w = int(self.adjacency[self.index(a), self.index(b)])
            if w == 0:
                raise ValueError(f"{a} and {b} are not adjacent")
            total += w
        return total


def cluster_shortest_path(graph: ClusterGraph, source: Pixel, target: Pixel) -> list[Pixel]:
    """Minimum-cost path; equal-cost paths resolve to the lexicographically smallest."""
    src, dst = graph.index(source), graph.index(target)
    nodes = graph.nodes
    adj = graph.adjacency
    heap: list[tuple[int, tuple[Pixel, ...], int]] = [(0, (nodes[src],), src)]
    settled: set[int] = set()
    while heap:
        cost, path, u = heapq.heappop(heap)
        if u in settled:
            continue
        if u == dst:
            return list(path)
        settled.add(u)
        for v in np.flatnonzero(adj[u]).tolist():
            if v not in settled:
                heapq.heappush(heap, (cost + int(adj[u, v]), path + (nodes[v],), v))
    raise ValueError("cluster not connected: no path between anchors")
