"""Skeleton images, point classification, clusters, branches and segments.

Pixels are ``(row, col)`` tuples; rows grow downward and columns rightward.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum, IntEnum
from typing import Iterable, Iterator, Mapping

import numpy as np

Pixel = tuple[int, int]
BranchRef = tuple[int, int]  # (cluster id, branch index)

NEIGHBOR_OFFSETS: tuple[Pixel, ...] = (
    (-1, -1),
    (-1, 0),
    (-1, 1),
    (0, -1),
    (0, 1),
    (1, -1),
    (1, 0),
    (1, 1),
)


def neighbors(p: Pixel) -> Iterator[Pixel]:
    r, c = p
    for dr, dc in NEIGHBOR_OFFSETS:
        yield (r + dr, c + dc)


def are_adjacent(a: Pixel, b: Pixel) -> bool:
    return a != b and abs(a[0] - b[0]) <= 1 and abs(a[1] - b[1]) <= 1


class IsolatedPixelError(ValueError):
    pass


@dataclass(frozen=True)
class SkeletonImage:
    """Binary grid; ``True`` is ink."""

    pixels: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.pixels, dtype=bool)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"skeleton grid must be 2-D and at least 1x1, got shape {arr.shape}")
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "pixels", arr)

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    def ink(self) -> list[Pixel]:
        rows, cols = np.nonzero(self.pixels)
        return list(zip(rows.tolist(), cols.tolist()))

    @classmethod
    def from_pixels(cls, pixels: Iterable[Pixel], shape: tuple[int, int] | None = None) -> "SkeletonImage":
        pts = list(pixels)
        if shape is None:
            if not pts:
                raise ValueError("cannot infer a shape from zero pixels")
            shape = (max(p[0] for p in pts) + 1, max(p[1] for p in pts) + 1)
        grid = np.zeros(shape, dtype=bool)
        for r, c in pts:
            grid[r, c] = True
        return cls(grid)

    @classmethod
    def from_strings(cls, rows: list[str], ink: str = "#") -> "SkeletonImage":
        """Build an image from ASCII art (handy for fixtures)."""
        width = max(len(r) for r in rows)
        grid = np.zeros((len(rows), width), dtype=bool)
        for i, row in enumerate(rows):
            for j, ch in enumerate(row):
                grid[i, j] = ch == ink
        return cls(grid)


class PixelClass(IntEnum):
    END = 1
    TRACE = 2
    BRANCH = 3


@dataclass(frozen=True)
class ClassMap:
    shape: tuple[int, int]
    classes: Mapping[Pixel, PixelClass]

    def __contains__(self, p: object) -> bool:
        return p in self.classes

    def __getitem__(self, p: Pixel) -> PixelClass:
        return self.classes[p]

    def ink_neighbors(self, p: Pixel) -> list[Pixel]:
        return [q for q in neighbors(p) if q in self.classes]

    def of_class(self, kind: PixelClass) -> list[Pixel]:
        return sorted(p for p, k in self.classes.items() if k == kind)


def neighbor_counts(image: SkeletonImage) -> np.ndarray:
    """8-neighbour ink count per pixel; out-of-grid neighbours count as background."""
    padded = np.pad(image.pixels.astype(np.int16), 1)
    h, w = image.pixels.shape
    total = np.zeros((h, w), dtype=np.int16)
    for dr, dc in NEIGHBOR_OFFSETS:
        total += padded[1 + dr : 1 + dr + h, 1 + dc : 1 + dc + w]
    return total


def classify_points(image: SkeletonImage) -> ClassMap:
    counts = neighbor_counts(image)
    ink = image.pixels
    isolated = np.argwhere(ink & (counts == 0))
    if len(isolated):
        coords = ", ".join(f"(row={r}, col={c})" for r, c in isolated[:10].tolist())
        raise IsolatedPixelError(f"isolated ink pixel(s) with no 8-neighbour: {coords}")
    classes: dict[Pixel, PixelClass] = {}
    rows, cols = np.nonzero(ink)
    for r, c in zip(rows.tolist(), cols.tolist()):
        n = counts[r, c]
        classes[(r, c)] = PixelClass.END if n == 1 else PixelClass.TRACE if n == 2 else PixelClass.BRANCH
    return ClassMap(shape=image.pixels.shape, classes=classes)


class Terminal(str, Enum):
    END_POINT = "reaches_end_point"
    CLUSTER = "reaches_other_cluster"
    EXHAUSTED = "exhausted"


@dataclass(frozen=True)
class Branch:
    """An output branch: the trace points leaving a cluster at one anchor adjacency."""

    anchor: Pixel
    first: Pixel  # outside pixel adjacent to the anchor; identifies the branch
    trace_points: tuple[Pixel, ...]
    terminal_kind: Terminal
    end_pixel: Pixel | None = None  # end point reached within the window
    distance_to_end_point: int | None = None
    distance_to_3rank: int | None = None
    segment_length: int = 0

    @property
    def points(self) -> tuple[Pixel, ...]:
        """Pixels used for direction estimates: trace points plus a reached end point."""
        if self.end_pixel is not None:
            return self.trace_points + (self.end_pixel,)
        return self.trace_points


@dataclass(frozen=True)
class Cluster:
    id: int
    points: frozenset[Pixel]
    anchors: tuple[Pixel, ...] = ()
    false_trace_points: frozenset[Pixel] = frozenset()
    arms: tuple[tuple[Pixel, Pixel], ...] = ()  # (anchor, outside neighbour)
    branches: tuple[Branch, ...] = ()
    members: tuple[int, ...] = ()

    @property
    def rank(self) -> int:
        return len(self.arms)

    @property
    def degenerate(self) -> bool:
        return self.rank < 2

    @property
    def center_of_gravity(self) -> tuple[float, float]:
        pts = self.anchors or tuple(sorted(self.points))
        return (
            sum(p[0] for p in pts) / len(pts),
            sum(p[1] for p in pts) / len(pts),
        )


class _UnionFind:
    def __init__(self) -> None:
        self.parent: dict[int, int] = {}

    def add(self, x: int) -> None:
        self.parent.setdefault(x, x)

    def find(self, x: int) -> int:
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            if rb < ra:
                ra, rb = rb, ra
            self.parent[rb] = ra


def find_clusters(class_map: ClassMap) -> list[Cluster]:
    """Two-pass 8-connected labelling of branch points."""
    branch = set(class_map.of_class(PixelClass.BRANCH))
    labels: dict[Pixel, int] = {}
    uf = _UnionFind()
    next_label = 0
    # first pass: raster order, look at already-visited neighbours (W, NW, N, NE)
    for p in sorted(branch):
        r, c = p
        seen = [labels[q] for q in ((r, c - 1), (r - 1, c - 1), (r - 1, c), (r - 1, c + 1)) if q in labels]
        if not seen:
            labels[p] = next_label
            uf.add(next_label)
            next_label += 1
        else:
            labels[p] = min(seen)
            for other in seen:
                uf.union(labels[p], other)
    # second pass: resolve equivalences
    groups: dict[int, list[Pixel]] = {}
    for p in sorted(branch):
        groups.setdefault(uf.find(labels[p]), []).append(p)
    ordered = sorted(groups.values(), key=lambda pts: pts[0])
    return [Cluster(id=i, points=frozenset(pts), members=(i,)) for i, pts in enumerate(ordered)]


def classify_cluster_pixels(cluster: Cluster, class_map: ClassMap, owner: Mapping[Pixel, int] | None = None) -> Cluster:
    """Promote false trace points to a fixed point, then derive anchors and arms.

    ``owner`` maps pixels of every cluster to its id so that pixels of other
    clusters are never absorbed.
    """
    points = set(cluster.points)
    false_trace = set(cluster.false_trace_points)
    foreign = (lambda q: q in owner and owner[q] != cluster.id) if owner is not None else (lambda q: False)
    changed = True
    while changed:
        changed = False
        candidates = sorted(
            {
                q
                for p in points
                for q in neighbors(p)
                if q in class_map and q not in points and not foreign(q) and class_map[q] == PixelClass.TRACE
            }
        )
        for q in candidates:
            nbrs = class_map.ink_neighbors(q)
            n_cluster = sum(1 for n in nbrs if n in points and n not in false_trace)
            n_false = sum(1 for n in nbrs if n in false_trace)
            if n_cluster >= 2 or (n_cluster >= 1 and n_false >= 1) or n_false >= 2:
                points.add(q)
                false_trace.add(q)
                changed = True
    arms = []
    for p in sorted(points):
        for q in neighbors(p):
            if q in class_map and q not in points and not foreign(q):
                arms.append((p, q))
    anchors = tuple(sorted({a for a, _ in arms}))
    return replace(
        cluster,
        points=frozenset(points),
        false_trace_points=frozenset(false_trace),
        anchors=anchors,
        arms=tuple(arms),
    )


def _owner_map(clusters: Iterable[Cluster]) -> dict[Pixel, int]:
    return {p: c.id for c in clusters for p in c.points}


def walk(class_map: ClassMap, start: Pixel, prev: Pixel | None, owner: Mapping[Pixel, int], limit: int | None = None):
    """Follow non-cluster pixels from ``start`` (reached from ``prev``).

    Returns ``(pixels, stop)`` where ``stop`` is ``("end", pixel)`` when the
    last pixel is an end point, ``("cluster", cluster_id, last_pixel)`` when
    the next pixel belongs to a cluster, ``("loop", None)`` when the walk
    came back to ``start``, or ``("limit", None)`` after ``limit`` pixels.
    """
    path = [start]
    cur, back = start, prev
    while True:
        if class_map[cur] == PixelClass.END and not (cur == start and prev is None):
            return path, ("end", cur)
        nxt = [q for q in class_map.ink_neighbors(cur) if q != back]
        hit = [q for q in nxt if q in owner]
        if hit:
            return path, ("cluster", owner[hit[0]], cur)
        if not nxt:
            return path, ("end", cur)
        step = nxt[0]
        if step == start:
            return path, ("loop", None)
        if limit is not None and len(path) >= limit:
            return path, ("limit", None)
        path.append(step)
        back, cur = cur, step


def _connections(clusters: list[Cluster], class_map: ClassMap, max_len: int) -> dict[tuple[int, int], list[frozenset[Pixel]]]:
    """Short segments (fewer than ``max_len`` pixels) joining two different clusters."""
    owner = _owner_map(clusters)
    found: dict[tuple[int, int], dict[frozenset[Pixel], None]] = {}
    for cl in clusters:
        for anchor, first in cl.arms:
            if class_map[first] == PixelClass.END:
                continue
            path, stop = walk(class_map, first, anchor, owner, limit=max_len)
            if stop[0] != "cluster" or len(path) >= max_len:
                continue
            other = stop[1]
            if other == cl.id:
                continue
            key = (min(cl.id, other), max(cl.id, other))
            found.setdefault(key, {})[frozenset(path)] = None
    return {k: list(v) for k, v in found.items()}


def merge_brotherhood(clusters: list[Cluster], class_map: ClassMap, max_dist: int) -> list[Cluster]:
    """Merge clusters joined by at least two short branches, repeated until stable."""
    current = list(clusters)
    while True:
        links = _connections(current, class_map, max_dist)
        uf = _UnionFind()
        for cl in current:
            uf.add(cl.id)
        absorbed: dict[tuple[int, int], list[frozenset[Pixel]]] = {}
        for key, segs in sorted(links.items()):
            if len(segs) >= 2:
                uf.union(*key)
                absorbed[key] = segs
        if not absorbed:
            return current
        groups: dict[int, list[Cluster]] = {}
        for cl in current:
            groups.setdefault(uf.find(cl.id), []).append(cl)
        merged_raw = []
        for root, members in groups.items():
            if len(members) == 1:
                merged_raw.append(members[0])
                continue
            ids = {m.id for m in members}
            pts = set().union(*(m.points for m in members))
            false_pts = set().union(*(m.false_trace_points for m in members))
            for (a, b), segs in absorbed.items():
                if a in ids and b in ids:
                    for seg in segs:
                        pts |= seg
            member_ids = tuple(sorted({i for m in members for i in (m.members or (m.id,))}))
            merged_raw.append(Cluster(id=-1, points=frozenset(pts), false_trace_points=frozenset(false_pts), members=member_ids))
        merged_raw.sort(key=lambda c: min(c.points))
        renumbered = [replace(c, id=i) for i, c in enumerate(merged_raw)]
        owner = _owner_map(renumbered)
        current = [classify_cluster_pixels(c, class_map, owner) for c in renumbered]


def extract_branches(
    cluster: Cluster,
    class_map: ClassMap,
    n_points: int,
    owner: Mapping[Pixel, int] | None = None,
    ranks: Mapping[int, int] | None = None,
) -> Cluster:
    """Attach one Branch per arm, walking outward for up to ``n_points`` trace points."""
    if n_points < 1:
        raise ValueError("branch window must hold at least one point")
    if owner is None:
        owner = {p: cluster.id for p in cluster.points}
        for p, k in class_map.classes.items():
            if k == PixelClass.BRANCH and p not in owner:
                owner[p] = -1
    branches = []
    for anchor, first in cluster.arms:
        path, stop = walk(class_map, first, anchor, owner)
        trace: list[Pixel] = []
        end_pixel = None
        terminal = Terminal.EXHAUSTED
        for p in path:
            if len(trace) == n_points:
                break
            if class_map[p] == PixelClass.END:
                end_pixel = p
                terminal = Terminal.END_POINT
                break
            trace.append(p)
        else:
            if len(trace) < n_points:
                terminal = Terminal.CLUSTER if stop[0] == "cluster" else Terminal.EXHAUSTED
        d_ep = len(path) if stop[0] == "end" else None
        d_3rc = None
        if stop[0] == "cluster" and ranks is not None and ranks.get(stop[1]) == 3 and stop[1] != cluster.id:
            d_3rc = len(path)
        branches.append(
            Branch(
                anchor=anchor,
                first=first,
                trace_points=tuple(trace),
                terminal_kind=terminal,
                end_pixel=end_pixel,
                distance_to_end_point=d_ep,
                distance_to_3rank=d_3rc,
                segment_length=len(path),
            )
        )
    return replace(cluster, branches=tuple(branches))


@dataclass(frozen=True)
class Segment:
    """A maximal run of trace/end pixels.

    ``head``/``tail`` name the cluster branch attached at ``pixels[0]`` /
    ``pixels[-1]``; ``None`` means that end is an end point (or, for closed
    loops, that there is no end at all).
    """

    id: int
    pixels: tuple[Pixel, ...]
    head: BranchRef | None
    tail: BranchRef | None
    closed: bool = False

    def oriented_from(self, ref: BranchRef | None, start_pixel: Pixel | None = None) -> tuple[Pixel, ...]:
        if ref is not None:
            if self.head == ref:
                return self.pixels
            if self.tail == ref:
                return self.pixels[::-1]
            raise KeyError(f"branch {ref} not attached to segment {self.id}")
        if start_pixel == self.pixels[0]:
            return self.pixels
        if start_pixel == self.pixels[-1]:
            return self.pixels[::-1]
        raise KeyError(f"{start_pixel} is not an end of segment {self.id}")

    def other_end(self, ref: BranchRef | None, start_pixel: Pixel | None = None) -> BranchRef | None:
        oriented = self.oriented_from(ref, start_pixel)
        return self.tail if oriented is self.pixels else self.head


@dataclass
class Skeleton:
    """Everything derived from one image before pairing."""

    image: SkeletonImage
    class_map: ClassMap
    clusters: list[Cluster]
    segments: list[Segment]
    owner: dict[Pixel, int]
    branch_segment: dict[BranchRef, int]
    segment_of_pixel: dict[Pixel, int] = field(default_factory=dict)

    def branch(self, ref: BranchRef) -> Branch:
        return self.clusters[ref[0]].branches[ref[1]]

    def segment_for(self, ref: BranchRef) -> Segment:
        return self.segments[self.branch_segment[ref]]

    def end_points(self) -> list[Pixel]:
        return self.class_map.of_class(PixelClass.END)


def build_segments(class_map: ClassMap, clusters: list[Cluster]) -> tuple[list[Segment], dict[BranchRef, int]]:
    owner = _owner_map(clusters)
    by_first: dict[tuple[int, Pixel], BranchRef] = {}
    for cl in clusters:
        for idx, (anchor, first) in enumerate(cl.arms):
            by_first[(cl.id, first)] = (cl.id, idx)
    segments: list[Segment] = []
    branch_segment: dict[BranchRef, int] = {}
    used: set[Pixel] = set()
    for cl in clusters:
        for idx, (anchor, first) in enumerate(cl.arms):
            ref = (cl.id, idx)
            if ref in branch_segment:
                continue
            path, stop = walk(class_map, first, anchor, owner)
            tail = None
            if stop[0] == "cluster":
                tail = by_first[(stop[1], path[-1])]
                if tail == ref:
                    # a single pixel touching the same cluster twice is promoted; never here
                    raise AssertionError("segment loops onto its own branch")
            seg = Segment(id=len(segments), pixels=tuple(path), head=ref, tail=tail)
            branch_segment[ref] = seg.id
            if tail is not None:
                branch_segment[tail] = seg.id
            segments.append(seg)
            used.update(path)
    for p in class_map.of_class(PixelClass.END):
        if p in used:
            continue
        path, stop = walk(class_map, p, None, owner)
        if stop[0] == "cluster":
            raise AssertionError("end-point segment reaching a cluster should come from the cluster side")
        segments.append(Segment(id=len(segments), pixels=tuple(path), head=None, tail=None))
        used.update(path)
    for p in sorted(class_map.classes):
        if p in used or p in owner:
            continue
        # remaining pixels lie on closed loops of trace points
        path, stop = walk(class_map, p, None, owner)
        segments.append(Segment(id=len(segments), pixels=tuple(path), head=None, tail=None, closed=True))
        used.update(path)
    return segments, branch_segment


def analyze(image: SkeletonImage, branch_points: int = 5, brotherhood_dist: int = 10) -> Skeleton:
    """Classify points, find and merge clusters, extract branches and segments."""
    class_map = classify_points(image)
    raw = find_clusters(class_map)
    owner = _owner_map(raw)
    classified = [classify_cluster_pixels(c, class_map, owner) for c in raw]
    merged = merge_brotherhood(classified, class_map, brotherhood_dist)
    owner = _owner_map(merged)
    ranks = {c.id: c.rank for c in merged}
    clusters = [extract_branches(c, class_map, branch_points, owner, ranks) for c in merged]
    segments, branch_segment = build_segments(class_map, clusters)
    seg_of_pixel = {p: s.id for s in segments for p in s.pixels}
    return Skeleton(
        image=image,
        class_map=class_map,
        clusters=clusters,
        segments=segments,
        owner=owner,
        branch_segment=branch_segment,
        segment_of_pixel=seg_of_pixel,
    )
