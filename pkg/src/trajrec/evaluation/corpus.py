"""Golden fixtures and a seeded generator of multi-stroke trajectories with controlled crossings."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..skeleton import IsolatedPixelError, Pixel, PixelClass, Skeleton, SkeletonImage, analyze
from .raster import OnlineTrajectory, rasterize


@dataclass
class Sample:
    """One corpus entry: the on-line source, its raster and the aligned pen order."""

    name: str
    trajectory: OnlineTrajectory | None
    image: SkeletonImage
    strokes: list[list[Pixel]]
    expected_kinds: tuple[str, ...] = ()  # for fixtures: intended kind of each cluster, by id
    meta: dict = field(default_factory=dict)

    @property
    def real_starts(self) -> list[Pixel]:
        return [s[0] for s in self.strokes]

    @property
    def n_components(self) -> int:
        return len(self.strokes)

    def ground_truth_points(self) -> list[Pixel]:
        return [p for s in self.strokes for p in s]


def make_sample(name: str, strokes_xy, expected_kinds: tuple[str, ...] = (), margin: int = 3, **meta) -> Sample:
    traj = OnlineTrajectory.from_lists(strokes_xy)
    image, strokes = rasterize(traj, margin=margin)
    return Sample(name, traj, image, strokes, expected_kinds, dict(meta))


def _line_through(center, angle_deg: float, half: float):
    cx, cy = center
    dx, dy = math.cos(math.radians(angle_deg)) * half, math.sin(math.radians(angle_deg)) * half
    return [(cx - dx, cy - dy), (cx + dx, cy + dy)]


def _circle_arc(center, radius: float, a0: float, a1: float, step: float = 2.0):
    n = max(2, int(abs(a1 - a0) * math.pi / 180 * radius / step) + 1)
    return [
        (center[0] + radius * math.cos(math.radians(a)), center[1] + radius * math.sin(math.radians(a)))
        for a in np.linspace(a0, a1, n)
    ]


def golden_fixtures() -> list[Sample]:
    """Hand-built cases, each with a single intended resolution per cluster."""
    out = [
        make_sample("line", [[(0, 0), (50, 20)]]),
        make_sample("plus", [[(1, 5), (9, 5)], [(5, 1), (5, 9)]], ("EvenRank",)),
    ]
    for angle in (30, 45, 60):
        out.append(
            make_sample(
                f"x{angle}",
                [_line_through((40, 40), 0, 35), _line_through((40, 40), angle, 35)],
                ("EvenRank",),
            )
        )
    out.append(make_sample("tshape", [[(0, 0), (60, 0)], [(30, 30), (30, 0)]], ("TPattern",)))
    out.append(make_sample("retrace_spur", [[(0, 20), (30, 20), (30, 8), (30, 20), (60, 20)]], ("Retraced",)))
    # lollipop: up the tail, once round the loop, back down the tail
    loop = _circle_arc((30, 20), 12, 90, 90 + 360)
    out.append(make_sample("retrace_loop", [[(30, 47)] + loop + [(30, 47)]], ("Retraced",)))
    out.append(
        make_sample(
            "coupled",
            [[(0, 0), (25, 25), (45, 25), (70, 50)], [(0, 50), (25, 25), (45, 25), (70, 0)]],
            ("Coupled", "Coupled"),
        )
    )
    out.append(
        make_sample(
            "triple",
            [_line_through((40, 40), a, 35) for a in (0, 60, 120)],
            ("EvenRank",),
        )
    )
    return out


# --- random corpus -------------------------------------------------------------


@dataclass(frozen=True)
class CorpusConfig:
    n_images: int = 120
    seed: int = 20240917
    width: float = 140.0
    height: float = 90.0
    max_strokes: int = 3
    spur_probability: float = 0.3
    sample_step: float = 2.0
    min_crossing_angle: float = 30.0
    # later strokes are aimed through an earlier one at an angle drawn from this window (degrees)
    aim_angle_range: tuple[float, float] = (35.0, 90.0)
    min_event_separation: float = 15.0
    near_miss_distance: float = 4.0
    near_miss_radius: float = 12.0
    max_attempts: int = 200000


def _bezier(ctrl: np.ndarray, n: int) -> np.ndarray:
    t = np.linspace(0.0, 1.0, n)[:, None]
    p0, p1, p2, p3 = ctrl
    return (1 - t) ** 3 * p0 + 3 * (1 - t) ** 2 * t * p1 + 3 * (1 - t) * t**2 * p2 + t**3 * p3


def _resample_polyline(pts: np.ndarray, step: float) -> np.ndarray:
    seg = np.hypot(*np.diff(pts, axis=0).T)
    s = np.concatenate([[0.0], np.cumsum(seg)])
    n = max(2, int(math.ceil(s[-1] / step)) + 1)
    grid = np.linspace(0.0, s[-1], n)
    return np.column_stack([np.interp(grid, s, pts[:, 0]), np.interp(grid, s, pts[:, 1])])


def _segment_intersections(p: np.ndarray, q: np.ndarray, same: bool):
    """Proper crossings between polyline segments: (point, angle in [0, 90])."""
    a0, a1 = p[:-1], p[1:]
    b0, b1 = q[:-1], q[1:]
    d1 = (a1 - a0)[:, None, :]
    d2 = (b1 - b0)[None, :, :]
    diff = b0[None, :, :] - a0[:, None, :]
    denom = d1[..., 0] * d2[..., 1] - d1[..., 1] * d2[..., 0]
    with np.errstate(divide="ignore", invalid="ignore"):
        t = (diff[..., 0] * d2[..., 1] - diff[..., 1] * d2[..., 0]) / denom
        u = (diff[..., 0] * d1[..., 1] - diff[..., 1] * d1[..., 0]) / denom
    hit = (np.abs(denom) > 1e-12) & (t >= 0) & (t < 1) & (u >= 0) & (u < 1)
    if same:
        i, j = np.indices(hit.shape)
        hit &= j > i + 2
    out = []
    for i, j in zip(*np.nonzero(hit)):
        point = a0[i] + t[i, j] * (a1[i] - a0[i])
        v1, v2 = a1[i] - a0[i], b1[j] - b0[j]
        cos = abs(float(np.dot(v1, v2))) / (np.linalg.norm(v1) * np.linalg.norm(v2))
        out.append((point, math.degrees(math.acos(min(1.0, cos)))))
    return out


def _near_misses_ok(p: np.ndarray, q: np.ndarray, events: list[np.ndarray], cfg: CorpusConfig, same: bool) -> bool:
    d = np.sqrt(((p[:, None, :] - q[None, :, :]) ** 2).sum(axis=2))
    close = d < cfg.near_miss_distance
    if same:
        s = np.concatenate([[0.0], np.cumsum(np.hypot(*np.diff(p, axis=0).T))])
        close &= np.abs(s[:, None] - s[None, :]) > 3 * cfg.near_miss_radius
    idx = np.nonzero(close)[0]
    if len(idx) == 0:
        return True
    if not events:
        return False
    ev = np.asarray(events)
    pts = p[idx]
    dist = np.sqrt(((pts[:, None, :] - ev[None, :, :]) ** 2).sum(axis=2)).min(axis=1)
    return bool(np.all(dist <= cfg.near_miss_radius))


def _random_stroke(rng: np.random.Generator, cfg: CorpusConfig, others: list[np.ndarray]) -> np.ndarray | None:
    """Gentle cubic Bezier; once strokes exist, aimed steeply through a point of one of them."""
    lo, hi = np.array([5.0, 5.0]), np.array([cfg.width - 5, cfg.height - 5])
    length = rng.uniform(50, 120)
    if others:
        host = others[int(rng.integers(len(others)))]
        k = int(rng.integers(2, len(host) - 2))
        tangent = host[k + 1] - host[k - 1]
        heading = math.atan2(tangent[1], tangent[0]) + rng.choice([-1, 1]) * math.radians(rng.uniform(*cfg.aim_angle_range))
        u = np.array([math.cos(heading), math.sin(heading)])
        before = rng.uniform(0.3, 0.7) * length
        start, end = host[k] - before * u, host[k] + (length - before) * u
    else:
        start = rng.uniform(lo, hi)
        heading = rng.uniform(0, 2 * math.pi)
        end = start + length * np.array([math.cos(heading), math.sin(heading)])
    start, end = np.clip(start, lo, hi), np.clip(end, lo, hi)
    chord = end - start
    if np.linalg.norm(chord) < 40:
        return None
    normal = np.array([-chord[1], chord[0]]) / np.linalg.norm(chord)
    bend = 0.2 if others else 0.5
    c1 = start + chord / 3 + normal * rng.uniform(-bend, bend) * np.linalg.norm(chord)
    c2 = start + 2 * chord / 3 + normal * rng.uniform(-bend, bend) * np.linalg.norm(chord)
    dense = _bezier(np.array([start, c1, c2, end]), 400)
    return _resample_polyline(dense, cfg.sample_step)


def _try_sample(rng: np.random.Generator, cfg: CorpusConfig, name: str) -> Sample | None:
    n_strokes = int(rng.integers(1, cfg.max_strokes + 1))
    polys: list[np.ndarray] = []
    for _ in range(n_strokes):
        stroke = _random_stroke(rng, cfg, polys)
        if stroke is None:
            return None
        polys.append(stroke)
    spur = None
    if rng.random() < cfg.spur_probability:
        s = polys[0]
        k = int(rng.integers(len(s) // 3, 2 * len(s) // 3))
        tangent = s[k + 1] - s[k - 1]
        tangent /= np.linalg.norm(tangent)
        side = 1 if rng.random() < 0.5 else -1
        tip = s[k] + side * rng.uniform(10, 16) * np.array([-tangent[1], tangent[0]])
        spur = (k, np.array([s[k], tip]))
    events: list[np.ndarray] = []
    for i in range(len(polys)):
        for j in range(i, len(polys)):
            for point, angle in _segment_intersections(polys[i], polys[j], same=i == j):
                if angle < cfg.min_crossing_angle:
                    return None
                events.append(point)
    n_crossings = len(events)
    if spur is not None:
        junction = spur[1][0]
        spur_dense = _resample_polyline(spur[1], 0.5)[2:]
        for i, p in enumerate(polys):
            if i == 0:
                p = p[np.hypot(*(p - junction).T) > cfg.min_event_separation]
            if len(p) and np.sqrt(((spur_dense[:, None, :] - p[None, :, :]) ** 2).sum(axis=2)).min() < 2 * cfg.near_miss_distance:
                return None
        events.append(junction)
    for a in range(len(events)):
        for b in range(a + 1, len(events)):
            if np.linalg.norm(events[a] - events[b]) < cfg.min_event_separation:
                return None
    for i in range(len(polys)):
        for j in range(i, len(polys)):
            if not _near_misses_ok(polys[i], polys[j], events, cfg, same=i == j):
                return None
    # every stroke end has to stay clear of all other ink
    for i, p in enumerate(polys):
        for end_idx in (0, len(p) - 1):
            for j, q in enumerate(polys):
                d = np.hypot(*(q - p[end_idx]).T)
                if i == j:
                    d = d[np.abs(np.arange(len(q)) - end_idx) > 8]
                if d.size and d.min() < 6:
                    return None
    strokes_xy = [p.tolist() for p in polys]
    if spur is not None:
        k, seg = spur
        s0 = polys[0]
        strokes_xy[0] = s0[: k + 1].tolist() + [seg[1].tolist(), s0[k].tolist()] + s0[k + 1 :].tolist()
    try:
        sample = make_sample(name, strokes_xy, margin=3, n_crossings=n_crossings, spur=spur is not None)
        skel = analyze(sample.image)
    except (IsolatedPixelError, ValueError):
        return None
    if not _raster_ok(sample, skel, n_crossings, spur is not None):
        return None
    return sample


def _raster_ok(sample: Sample, skel: Skeleton, n_crossings: int, has_spur: bool) -> bool:
    cm = skel.class_map
    ends = [s[0] for s in sample.strokes] + [s[-1] for s in sample.strokes]
    if has_spur:
        seq = sample.strokes[0]
        tips = [seq[i] for i in range(1, len(seq) - 1) if seq[i - 1] == seq[i + 1]]
        if len(tips) != 1:
            return False
        ends.append(tips[0])
    if any(cm[p] != PixelClass.END for p in ends):
        return False
    if len(cm.of_class(PixelClass.END)) != len(set(ends)):
        return False
    ranks = sorted(c.rank for c in skel.clusters)
    expected = sorted([4] * n_crossings + ([3] if has_spur else []))
    return ranks == expected and not any(s.closed for s in skel.segments)


def random_corpus(cfg: CorpusConfig | None = None) -> list[Sample]:
    """Deterministic for a given config: the same seed always yields the same samples."""
    cfg = cfg or CorpusConfig()
    rng = np.random.default_rng(cfg.seed)
    out: list[Sample] = []
    attempts = 0
    while len(out) < cfg.n_images:
        attempts += 1
        if attempts > cfg.max_attempts:
            raise RuntimeError(f"generator accepted only {len(out)} of {cfg.n_images} images")
        sample = _try_sample(rng, cfg, f"synth{len(out):03d}")
        if sample is not None:
            out.append(sample)
    return out
