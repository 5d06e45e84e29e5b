"""Ordered traversal of a resolved skeleton into pen-down components."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Sequence

from .params import ParamSet
from .pairing import ClusterKind, ClusterResolution
from .skeleton import BranchRef, Pixel, PixelClass, Skeleton, are_adjacent, neighbors

GT_TOLERANCE = 2.0


class Scenario(str, Enum):
    ESTNC = "ESTNC"  # estimated start, nearest next component
    RSENC = "RSENC"  # real starts, nearest next component
    RSEOC = "RSEOC"  # real starts in their recorded order

    @classmethod
    def parse(cls, text: str) -> "Scenario":
        try:
            return cls(text.upper())
        except ValueError:
            raise ValueError(f"unknown scenario {text!r}; expected estnc, rsenc or rseoc") from None


class GroundTruthMisaligned(ValueError):
    pass


@dataclass(frozen=True)
class Component:
    points: tuple[Pixel, ...]

    @property
    def start_ep(self) -> Pixel:
        return self.points[0]

    @property
    def end_ep(self) -> Pixel:
        return self.points[-1]

    @property
    def length(self) -> int:
        return len(self.points)


@dataclass(frozen=True)
class RecoveredTrajectory:
    components: tuple[Component, ...]
    scenario: Scenario

    def points(self) -> list[Pixel]:
        return [p for c in self.components for p in c.points]


@dataclass(frozen=True)
class StartModel:
    """Axis-aligned Gaussian over likely first pen-down positions, in pixels."""

    mean: tuple[float, float]
    sigma: tuple[float, float]

    @classmethod
    def for_image(cls, height: int, width: int, params: ParamSet) -> "StartModel":
        return cls(
            mean=(params.start_mean_row * height, params.start_mean_col * width),
            sigma=(params.start_sigma_row * height, params.start_sigma_col * width),
        )

    def inside(self, p: Pixel, k: float = 2.0) -> bool:
        dr = (p[0] - self.mean[0]) / (k * self.sigma[0]) if self.sigma[0] > 0 else math.inf * (p[0] != self.mean[0])
        dc = (p[1] - self.mean[1]) / (k * self.sigma[1]) if self.sigma[1] > 0 else math.inf * (p[1] != self.mean[1])
        return dr * dr + dc * dc <= 1.0


def select_start_point(candidates: Sequence[Pixel], model: StartModel) -> Pixel:
    if not candidates:
        raise ValueError("no end points to start from")
    inside = [p for p in candidates if model.inside(p)]
    if inside:
        return min(inside, key=lambda p: (math.hypot(p[0] - model.mean[0], p[1] - model.mean[1]), p[1], p[0]))
    return min(candidates, key=lambda p: (p[1], p[0]))


def next_component(last: Pixel, candidates: Sequence[Pixel]) -> Pixel:
    """Nearest candidate to ``last``; ties go to the smaller column, then row."""
    if not candidates:
        raise ValueError("no remaining end points")
    return min(candidates, key=lambda p: (math.hypot(p[0] - last[0], p[1] - last[1]), p[1], p[0]))


class _Tracer:
    def __init__(self, skel: Skeleton, resolutions: Sequence[ClusterResolution]) -> None:
        self.skel = skel
        self.res_of: dict[BranchRef, ClusterResolution] = {}
        self.res_of_cluster: dict[int, ClusterResolution] = {}
        for res in resolutions:
            for cid in res.cluster_ids:
                self.res_of_cluster[cid] = res
                for i in range(len(skel.clusters[cid].branches)):
                    self.res_of[(cid, i)] = res
        self.used_pairs: set[tuple[int, int]] = set()  # (resolution cluster id, pair index)
        self.uses = [0] * len(skel.segments)
        self.allowed = [1] * len(skel.segments)
        self.retrace_ends: set[Pixel] = set()
        for res in resolutions:
            if res.retraced is not None:
                seg = skel.segment_for(res.retraced)
                self.allowed[seg.id] = 2
                self.retrace_ends.update(p for p in (seg.pixels[0], seg.pixels[-1]) if skel.class_map[p] == PixelClass.END)
            if res.shared_segment is not None:
                # the shared segment is walked as part of the fused unit's internal paths
                self.uses[res.shared_segment] = 1

    def free_ends(self) -> list[Pixel]:
        out = []
        for seg in self.skel.segments:
            if self.uses[seg.id] or seg.closed:
                continue
            for p in {seg.pixels[0], seg.pixels[-1]}:
                if self.skel.class_map[p] == PixelClass.END:
                    out.append(p)
        return sorted(out)

    def _unused_pair(self, res: ClusterResolution, ref: BranchRef):
        for idx, pair in enumerate(res.pairs):
            if (res.cluster_id, idx) in self.used_pairs:
                continue
            if pair.a == ref:
                return idx, pair.path, pair.b
            if pair.b == ref:
                return idx, pair.path[::-1], pair.a
        return None

    def trace_from_end(self, start: Pixel) -> Component:
        seg_id = self.skel.segment_of_pixel[start]
        seg = self.skel.segments[seg_id]
        pixels = seg.oriented_from(None, start)
        return Component(tuple(self._run(seg_id, list(pixels), seg.other_end(None, start), None)))

    def trace_circuit(self, seg_id: int) -> Component:
        seg = self.skel.segments[seg_id]
        return Component(tuple(self._run(seg_id, list(seg.pixels), seg.tail, None)))

    def _run(self, seg_id: int, pixels: list[Pixel], far: BranchRef | None, exited: BranchRef | None) -> list[Pixel]:
        """Walk segment ``seg_id`` (already oriented) and keep going through clusters."""
        out: list[Pixel] = []
        while True:
            self.uses[seg_id] += 1
            out.extend(pixels)
            if far is None:
                if exited is None:
                    return out
                res = self.res_of[exited]
                nxt = self._unused_pair(res, exited)
                if nxt is None or self.uses[seg_id] >= self.allowed[seg_id]:
                    return out
                # turnaround at the tip of a retraced branch
                out.extend(pixels[::-1][1:])
                self.uses[seg_id] += 1
                entering = exited
            else:
                entering = far
            res = self.res_of[entering]
            anchor = self.skel.branch(entering).anchor
            if res.kind == ClusterKind.DEGENERATE:
                out.append(anchor)
                return out
            nxt = self._unused_pair(res, entering)
            if nxt is None:
                out.append(anchor)
                return out
            idx, path, exit_ref = nxt
            self.used_pairs.add((res.cluster_id, idx))
            out.extend(path)
            seg = self.skel.segment_for(exit_ref)
            if self.uses[seg.id] >= self.allowed[seg.id]:
                return out
            seg_id = seg.id
            pixels = list(seg.oriented_from(exit_ref))
            far = seg.other_end(exit_ref)
            exited = exit_ref

    def trace_loop(self, seg_id: int) -> Component:
        seg = self.skel.segments[seg_id]
        self.uses[seg_id] += 1
        pix = list(seg.pixels)
        start = min(pix)
        i = pix.index(start)
        pix = pix[i:] + pix[:i]
        if len(pix) > 2:
            a, b = pix[1], pix[-1]
            cost = lambda q: (0 if q[0] == start[0] or q[1] == start[1] else 1, q)  # noqa: E731
            if cost(b) < cost(a):
                pix = [start] + pix[1:][::-1]
        return Component(tuple(pix + [start]))


def _snap(p: Pixel, ends: Sequence[Pixel]) -> Pixel:
    if not ends:
        raise GroundTruthMisaligned("ground truth misaligned: skeleton has no end points")
    best = min(ends, key=lambda q: (math.hypot(q[0] - p[0], q[1] - p[1]), q))
    if math.hypot(best[0] - p[0], best[1] - p[1]) > GT_TOLERANCE:
        raise GroundTruthMisaligned(f"ground truth misaligned: start (row={p[0]}, col={p[1]}) is not within {GT_TOLERANCE:g} px of an end point")
    return best


def _splice_leftovers(skel: Skeleton, comps: list[list[Pixel]]) -> list[list[Pixel]]:
    covered = {p for c in comps for p in c}
    left = sorted(set(skel.class_map.classes) - covered)
    remaining = set(left)
    while remaining:
        seed = min(remaining)
        group = {seed}
        stack = [seed]
        while stack:
            u = stack.pop()
            for v in neighbors(u):
                if v in remaining and v not in group:
                    group.add(v)
                    stack.append(v)
        remaining -= group
        host = None
        for ci, comp in enumerate(comps):
            for pi, p in enumerate(comp):
                touching = sorted(q for q in group if are_adjacent(p, q))
                if touching:
                    host = (ci, pi, touching[0])
                    break
            if host:
                break
        entry = host[2] if host else min(group)
        excursion: list[Pixel] = []
        seen: set[Pixel] = set()

        def visit(u: Pixel) -> None:
            seen.add(u)
            excursion.append(u)
            for v in sorted(neighbors(u)):
                if v in group and v not in seen:
                    visit(v)
                    excursion.append(u)

        visit(entry)
        if host:
            ci, pi, _ = host
            comps[ci][pi + 1 : pi + 1] = excursion + [comps[ci][pi]]
        else:
            comps.append(excursion)
    return comps


def recover(
    skel: Skeleton,
    resolutions: Sequence[ClusterResolution],
    params: ParamSet,
    scenario: Scenario | str = Scenario.ESTNC,
    real_starts: Sequence[Pixel] | None = None,
) -> RecoveredTrajectory:
    """Trace every ink pixel into ordered components.

    ``real_starts`` are (row, col) pen-down positions in writing order; they
    are required for the two real-start scenarios.
    """
    scenario = Scenario.parse(scenario) if isinstance(scenario, str) else scenario
    tracer = _Tracer(skel, resolutions)
    model = StartModel.for_image(skel.image.height, skel.image.width, params)
    ends = skel.end_points()
    queue: list[Pixel] = []
    if scenario != Scenario.ESTNC:
        if not real_starts:
            raise ValueError(f"{scenario.value} needs the real starting points")
        queue = [_snap(p, ends) for p in real_starts]
    comps: list[list[Pixel]] = []
    last: Pixel | None = None

    while True:
        free = tracer.free_ends()
        if not free:
            break
        start = None
        if queue:
            pending = [p for p in queue if p in free]
            if pending:
                if scenario == Scenario.RSEOC:
                    start = pending[0]
                elif last is None:
                    start = select_start_point(pending, model)
                else:
                    start = next_component(last, pending)
        if start is None:
            primary = [p for p in free if p not in tracer.retrace_ends] or free
            start = select_start_point(primary, model) if last is None else next_component(last, primary)
        comp = tracer.trace_from_end(start).points
        comps.append(list(comp))
        last = comp[-1]

    for seg in skel.segments:
        if tracer.uses[seg.id] == 0 and not seg.closed and seg.head is not None:
            comps.append(list(tracer.trace_circuit(seg.id).points))
    for seg in skel.segments:
        if tracer.uses[seg.id] == 0 and seg.closed:
            comps.append(list(tracer.trace_loop(seg.id).points))

    comps = _splice_leftovers(skel, comps)
    return RecoveredTrajectory(tuple(Component(tuple(c)) for c in comps), scenario)


def recover_image(image, params: ParamSet, scenario: Scenario | str = Scenario.ESTNC, real_starts=None):
    """Full pipeline from a skeleton image: analysis, pairing, traversal."""
    from .pairing import resolve_all
    from .skeleton import analyze

    skel = analyze(image, params.branch_points, params.brotherhood_dist)
    resolutions = resolve_all(skel, params)
    return skel, resolutions, recover(skel, resolutions, params, scenario, real_starts)


# --- point-list files ----------------------------------------------------------


def format_point_list(components: Sequence[Sequence[Pixel]], header: dict[str, str] | None = None) -> str:
    """``component_index x y order_index`` per line, x = column and y = row."""
    lines = []
    if header:
        lines.append("# " + " ".join(f"{k}={v}" for k, v in header.items()))
    for ci, comp in enumerate(components):
        for oi, (r, c) in enumerate(comp):
            lines.append(f"{ci} {c} {r} {oi}")
    return "\n".join(lines) + "\n"


def write_trajectory(traj: RecoveredTrajectory, path: str | Path, params: ParamSet) -> None:
    header = {"scenario": traj.scenario.value, "params": params.digest()}
    Path(path).write_text(format_point_list([c.points for c in traj.components], header))


def read_point_list(path: str | Path) -> tuple[dict[str, str], list[list[Pixel]]]:
    header: dict[str, str] = {}
    comps: dict[int, list[tuple[int, Pixel]]] = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            for item in line[1:].split():
                if "=" in item:
                    k, v = item.split("=", 1)
                    header[k] = v
            continue
        parts = line.split()
        if len(parts) != 4:
            raise ValueError(f"{path}:{lineno}: expected 'component x y order', got {line!r}")
        try:
            ci, x, y, oi = (int(v) for v in parts)
        except ValueError:
            raise ValueError(f"{path}:{lineno}: non-integer field in {line!r}") from None
        comps.setdefault(ci, []).append((oi, (y, x)))
    return header, [[p for _, p in sorted(comps[k])] for k in sorted(comps)]
