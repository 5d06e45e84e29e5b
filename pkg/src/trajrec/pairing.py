"""Pairing of cluster branches by good continuity.

Angle terms score the deviation from a straight continuation: two branches
whose inward directions differ by exactly 180 degrees contribute zero, so a
smaller score always means a smoother joint.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Sequence

from .geometry import (
    ClusterGraph,
    UndefinedAngleError,
    cluster_shortest_path,
    curvature,
    external_angle,
    fold,
    internal_angle,
)
from .params import ParamSet, WeightRow
from .skeleton import Branch, BranchRef, Cluster, Pixel, Skeleton

PERCENT_SCALE = 100.0 / 360.0


class ClusterKind(str, Enum):
    EVEN_RANK = "EvenRank"
    ODD_RANK = "OddRank"
    TPATTERN = "TPattern"
    RETRACED = "Retraced"
    COUPLED = "Coupled"
    NORMAL3 = "Normal3"
    DEGENERATE = "Degenerate"


@dataclass(frozen=True)
class PairGeometry:
    d_alpha: float
    d_beta: float
    curvature: float
    path: tuple[Pixel, ...]  # anchor of the first branch -> anchor of the second


@dataclass(frozen=True)
class PairScore:
    branch_i: BranchRef
    branch_j: BranchRef
    pi: float
    components: tuple[float, float, float]  # weighted external, internal, curvature terms


def deviation(a: float, b: float) -> float:
    """How far two inward directions are from pointing straight at each other."""
    return abs(180.0 - fold(a - b))


@dataclass
class Unit:
    """The pixels and branches a pairing decision is made over.

    Usually one cluster; for coupled clusters the union of both clusters and
    the segment they share.
    """

    key: tuple
    points: frozenset[Pixel]
    refs: tuple[BranchRef, ...]
    branches: dict[BranchRef, Branch]

    @property
    def center(self) -> tuple[float, float]:
        anchors = sorted({self.branches[r].anchor for r in self.refs})
        return (
            sum(p[0] for p in anchors) / len(anchors),
            sum(p[1] for p in anchors) / len(anchors),
        )


@dataclass
class Characterization:
    unit: Unit
    alpha: dict[BranchRef, float]
    beta: dict[BranchRef, float]
    pairs: dict[tuple[BranchRef, BranchRef], PairGeometry]
    self_curvature: dict[BranchRef, float] = field(default_factory=dict)

    def geometry(self, i: BranchRef, j: BranchRef) -> PairGeometry:
        if (i, j) in self.pairs:
            return self.pairs[(i, j)]
        g = self.pairs[(j, i)]
        return PairGeometry(g.d_alpha, g.d_beta, g.curvature, g.path[::-1])

    def score(self, i: BranchRef, j: BranchRef, weights: WeightRow) -> PairScore:
        g = self.geometry(i, j)
        terms = (
            weights.external * g.d_alpha,
            weights.internal * g.d_beta,
            weights.curvature * g.curvature,
        )
        lo, hi = (i, j) if i <= j else (j, i)
        return PairScore(lo, hi, terms[0] + terms[1] + terms[2], terms)


def joined_trace(bi: Branch, path: Sequence[Pixel], bj: Branch) -> list[Pixel]:
    return list(bi.points[::-1]) + list(path) + list(bj.points)


def characterize(unit: Unit, params: ParamSet, segment_pixels: dict[BranchRef, tuple[Pixel, ...]] | None = None) -> Characterization:
    scales = params.branch_points
    center = unit.center
    alpha: dict[BranchRef, float] = {}
    beta: dict[BranchRef, float] = {}
    for ref in unit.refs:
        b = unit.branches[ref]
        alpha[ref] = external_angle(b.anchor, b.points, scales)
        try:
            beta[ref] = internal_angle(center, b.points, scales)
        except UndefinedAngleError:
            beta[ref] = alpha[ref]
    graph = ClusterGraph.from_pixels(unit.points)
    pairs = {}
    for i, j in itertools.combinations(unit.refs, 2):
        bi, bj = unit.branches[i], unit.branches[j]
        path = tuple(cluster_shortest_path(graph, bi.anchor, bj.anchor))
        c = curvature(joined_trace(bi, path, bj), params.curvature_points)
        pairs[(i, j)] = PairGeometry(deviation(alpha[i], alpha[j]), deviation(beta[i], beta[j]), c, path)
    self_curv = {}
    for ref in unit.refs:
        b = unit.branches[ref]
        if b.distance_to_end_point is not None:
            pix = segment_pixels.get(ref) if segment_pixels else None
            trace = [b.anchor] + list(pix if pix is not None else b.points)
            self_curv[ref] = curvature(trace, params.curvature_points)
    return Characterization(unit, alpha, beta, pairs, self_curv)


def pair_score(ch: Characterization, i: BranchRef, j: BranchRef, weights: WeightRow) -> PairScore:
    return ch.score(i, j, weights)


@dataclass(frozen=True)
class Pair:
    a: BranchRef
    b: BranchRef
    path: tuple[Pixel, ...]

    @property
    def key(self) -> frozenset[BranchRef]:
        return frozenset((self.a, self.b))


@dataclass(frozen=True)
class ClusterResolution:
    cluster_id: int
    kind: ClusterKind
    pairs: tuple[Pair, ...]
    disjoint: tuple[BranchRef, ...]
    partner_id: int | None = None
    shared_segment: int | None = None
    retraced: BranchRef | None = None
    residue_kind: ClusterKind | None = None
    scores: tuple[PairScore, ...] = ()

    @property
    def cluster_ids(self) -> tuple[int, ...]:
        return (self.cluster_id,) if self.partner_id is None else (self.cluster_id, self.partner_id)

    @property
    def branches(self) -> set[BranchRef]:
        out = set(self.disjoint)
        for p in self.pairs:
            out.update((p.a, p.b))
        return out

    def pair_keys(self) -> set[frozenset[BranchRef]]:
        return {p.key for p in self.pairs}


def greedy_pairs(ch: Characterization, refs: Iterable[BranchRef], weights: WeightRow, count: int):
    """Repeatedly take the globally smallest score among the remaining branches."""
    remaining = sorted(refs)
    chosen: list[PairScore] = []
    for _ in range(count):
        scores = [ch.score(i, j, weights) for i, j in itertools.combinations(remaining, 2)]
        best = min(scores, key=lambda s: (s.pi, s.branch_i, s.branch_j))
        chosen.append(best)
        remaining = [r for r in remaining if r not in (best.branch_i, best.branch_j)]
    return chosen, remaining


def _pairs_from_scores(ch: Characterization, scores: Sequence[PairScore]) -> tuple[Pair, ...]:
    return tuple(Pair(s.branch_i, s.branch_j, ch.geometry(s.branch_i, s.branch_j).path) for s in scores)


def even_rank_weights(rank: int, params: ParamSet) -> WeightRow:
    return params.normal if rank <= 4 else params.odd_rank


def resolve_even_rank(ch: Characterization, params: ParamSet, cluster_id: int, weights: WeightRow | None = None) -> ClusterResolution:
    rank = len(ch.unit.refs)
    if rank % 2 or rank < 2:
        raise ValueError(f"resolve_even_rank needs an even rank >= 2, got {rank}")
    weights = weights or even_rank_weights(rank, params)
    chosen, _ = greedy_pairs(ch, ch.unit.refs, weights, rank // 2)
    return ClusterResolution(cluster_id, ClusterKind.EVEN_RANK, _pairs_from_scores(ch, chosen), (), scores=tuple(chosen))


def resolve_odd_rank(ch: Characterization, params: ParamSet) -> tuple[list[PairScore], list[BranchRef]]:
    """Greedy stage only; returns the chosen scores and the three residual branches."""
    rank = len(ch.unit.refs)
    if rank % 2 == 0 or rank < 5:
        raise ValueError(f"rank {rank}: use classify_3rank for rank 3, resolve_even_rank for even ranks")
    return greedy_pairs(ch, ch.unit.refs, params.odd_rank, (rank - 3) // 2)


# --- 3-rank taxonomy -------------------------------------------------------


def _third(refs: Sequence[BranchRef], i: BranchRef, j: BranchRef) -> BranchRef:
    return next(r for r in refs if r not in (i, j))


def find_retrace(ch: Characterization, refs: Sequence[BranchRef], params: ParamSet) -> BranchRef | None:
    candidates = []
    for k in refs:
        b = ch.unit.branches[k]
        d = b.distance_to_end_point
        if d is None or d > params.retrace_ep_dist:
            continue
        ck = ch.self_curvature.get(k, 0.0)
        if ck > params.retrace_curvature_max:
            continue
        i, j = [r for r in refs if r != k]
        if ch.score(i, j, params.tpattern).pi * PERCENT_SCALE <= params.retrace_pi_max:
            candidates.append((d, ck, k))
    return min(candidates)[2] if candidates else None


def _perpendicular_score(ch: Characterization, i: BranchRef, j: BranchRef, weights: WeightRow) -> float:
    g = ch.geometry(i, j)
    a = abs(90.0 - fold(ch.alpha[i] - ch.alpha[j]))
    b = abs(90.0 - fold(ch.beta[i] - ch.beta[j]))
    return weights.external * a + weights.internal * b + weights.curvature * g.curvature


def find_tpattern(ch: Characterization, refs: Sequence[BranchRef], params: ParamSet) -> tuple[BranchRef, BranchRef] | None:
    """Return the bar pair of a T-shaped cluster, or None."""
    for ref in refs:
        b = ch.unit.branches[ref]
        dists = [d for d in (b.distance_to_end_point, b.distance_to_3rank) if d is not None]
        if dists and min(dists) < params.tpattern_min_dist:
            return None
    lo = 180.0 * (1.0 - params.tpattern_straight_tol / 100.0)
    hi = 180.0 * (1.0 + params.tpattern_straight_tol / 100.0)
    bars = []
    for i, j in itertools.combinations(sorted(refs), 2):
        diff = fold(ch.alpha[i] - ch.alpha[j])
        if lo <= diff <= hi:
            bars.append((-diff, i, j))
    for _, i, j in sorted(bars):
        stem = _third(refs, i, j)
        if all(
            _perpendicular_score(ch, stem, arm, params.tpattern) * PERCENT_SCALE <= params.tpattern_pi_max
            for arm in (i, j)
        ):
            return (i, j)
    return None


def coupled_condition(fused: Characterization, params: ParamSet) -> bool:
    """Good-continuity test over the three perfect matchings of a fused 4-rank unit."""
    r1, r2, r3, r4 = fused.unit.refs
    w = params.coupled
    pi = lambda a, b: fused.score(a, b, w).pi * PERCENT_SCALE  # noqa: E731
    averages = [
        (pi(r1, r3) + pi(r2, r4)) / 2,
        (pi(r2, r3) + pi(r4, r1)) / 2,
        (pi(r2, r1) + pi(r3, r4)) / 2,
    ]
    agg = max(averages) if params.coupled_mode == "max" else min(averages)
    return agg <= params.coupled_pi_max


def classify_3rank(ch: Characterization, refs: Sequence[BranchRef], params: ParamSet, fused: Characterization | None = None) -> ClusterKind:
    if find_retrace(ch, refs, params) is not None:
        return ClusterKind.RETRACED
    if find_tpattern(ch, refs, params) is not None:
        return ClusterKind.TPATTERN
    if fused is not None and coupled_condition(fused, params):
        return ClusterKind.COUPLED
    return ClusterKind.NORMAL3


def resolve_3rank(ch: Characterization, refs: Sequence[BranchRef], kind: ClusterKind, params: ParamSet):
    """Pairs, disjoint branches and retraced branch for a 3-branch (sub)cluster."""
    refs = sorted(refs)
    if kind == ClusterKind.RETRACED:
        k = find_retrace(ch, refs, params)
        i, j = [r for r in refs if r != k]
        scores = (ch.score(i, k, params.tpattern), ch.score(k, j, params.tpattern))
        pairs = (Pair(i, k, ch.geometry(i, k).path), Pair(k, j, ch.geometry(k, j).path))
        return pairs, (), k, scores
    if kind == ClusterKind.TPATTERN:
        i, j = find_tpattern(ch, refs, params)
        s = ch.score(i, j, params.tpattern)
        return (Pair(i, j, ch.geometry(i, j).path),), (_third(refs, i, j),), None, (s,)
    if kind == ClusterKind.NORMAL3:
        chosen, rest = greedy_pairs(ch, refs, params.normal, 1)
        return _pairs_from_scores(ch, chosen), tuple(rest), None, tuple(chosen)
    raise ValueError(f"resolve_3rank cannot resolve kind {kind}")


# --- whole image -----------------------------------------------------------


def cluster_unit(skel: Skeleton, cluster: Cluster) -> Unit:
    refs = tuple((cluster.id, i) for i in range(len(cluster.branches)))
    return Unit(key=(cluster.id,), points=cluster.points, refs=refs, branches={r: cluster.branches[r[1]] for r in refs})


def fused_unit(skel: Skeleton, c1: Cluster, c2: Cluster, shared: int) -> Unit:
    seg = skel.segments[shared]
    outer = tuple(
        r
        for r in [(c1.id, i) for i in range(c1.rank)] + [(c2.id, i) for i in range(c2.rank)]
        if r not in (seg.head, seg.tail)
    )
    branches = {r: skel.branch(r) for r in outer}
    points = frozenset(c1.points | c2.points | set(seg.pixels))
    return Unit(key=(c1.id, c2.id, shared), points=points, refs=outer, branches=branches)


def _segment_pixels(skel: Skeleton, unit: Unit) -> dict[BranchRef, tuple[Pixel, ...]]:
    out = {}
    for ref in unit.refs:
        if unit.branches[ref].distance_to_end_point is not None:
            out[ref] = skel.segment_for(ref).oriented_from(ref)
    return out


def _characterize_cached(skel: Skeleton, unit: Unit, params: ParamSet, cache: dict | None) -> Characterization:
    key = (unit.key, params.branch_points, params.curvature_points)
    if cache is not None and key in cache:
        return cache[key]
    ch = characterize(unit, params, _segment_pixels(skel, unit))
    if cache is not None:
        cache[key] = ch
    return ch


def coupling_candidates(skel: Skeleton, eligible: set[int], max_len: float) -> list[tuple[int, int, int]]:
    """Mutually exclusive (c1, c2, segment) links between eligible 3-rank clusters, shortest first."""
    links = []
    for seg in skel.segments:
        if seg.head is None or seg.tail is None:
            continue
        a, b = seg.head[0], seg.tail[0]
        if a == b or a not in eligible or b not in eligible:
            continue
        if len(seg.pixels) <= max_len:
            links.append((len(seg.pixels), min(a, b), max(a, b), seg.id))
    taken: set[int] = set()
    out = []
    for _, a, b, sid in sorted(links):
        if a in taken or b in taken:
            continue
        taken.update((a, b))
        out.append((a, b, sid))
    return out


def resolve_all(skel: Skeleton, params: ParamSet, cache: dict | None = None) -> list[ClusterResolution]:
    """Resolve every cluster: even ranks, then odd ranks above three, then 3-rank clusters."""
    even, odd, three, degenerate = [], [], [], []
    for cl in skel.clusters:
        if cl.degenerate:
            degenerate.append(cl)
        elif cl.rank == 3:
            three.append(cl)
        elif cl.rank % 2 == 0:
            even.append(cl)
        else:
            odd.append(cl)

    out: list[ClusterResolution] = []
    for cl in even:
        ch = _characterize_cached(skel, cluster_unit(skel, cl), params, cache)
        out.append(resolve_even_rank(ch, params, cl.id))

    for cl in odd:
        ch = _characterize_cached(skel, cluster_unit(skel, cl), params, cache)
        chosen, rest = resolve_odd_rank(ch, params)
        residue = classify_3rank(ch, rest, params)
        pairs, disjoint, retraced, scores = resolve_3rank(ch, rest, residue, params)
        out.append(
            ClusterResolution(
                cl.id,
                ClusterKind.ODD_RANK,
                _pairs_from_scores(ch, chosen) + pairs,
                disjoint,
                retraced=retraced,
                residue_kind=residue,
                scores=tuple(chosen) + scores,
            )
        )

    chars = {cl.id: _characterize_cached(skel, cluster_unit(skel, cl), params, cache) for cl in three}
    kinds: dict[int, ClusterKind] = {}
    for cl in three:
        ch = chars[cl.id]
        if find_retrace(ch, ch.unit.refs, params) is not None:
            kinds[cl.id] = ClusterKind.RETRACED
        elif find_tpattern(ch, ch.unit.refs, params) is not None:
            kinds[cl.id] = ClusterKind.TPATTERN
    eligible = {cl.id for cl in three if cl.id not in kinds}
    coupled: dict[int, tuple[int, int, Characterization]] = {}
    for a, b, sid in coupling_candidates(skel, eligible, params.coupled_shared_max):
        fused = _characterize_cached(skel, fused_unit(skel, skel.clusters[a], skel.clusters[b], sid), params, cache)
        if coupled_condition(fused, params):
            coupled[a] = (b, sid, fused)
            kinds[a] = kinds[b] = ClusterKind.COUPLED
    for cl in three:
        kinds.setdefault(cl.id, ClusterKind.NORMAL3)

    for cl in three:
        kind = kinds[cl.id]
        if kind == ClusterKind.COUPLED:
            if cl.id not in coupled:
                continue  # emitted with its partner
            partner, sid, fused = coupled[cl.id]
            res = resolve_even_rank(fused, params, cl.id, weights=params.coupled)
            out.append(
                ClusterResolution(
                    cl.id, ClusterKind.COUPLED, res.pairs, (), partner_id=partner, shared_segment=sid, scores=res.scores
                )
            )
            continue
        ch = chars[cl.id]
        pairs, disjoint, retraced, scores = resolve_3rank(ch, ch.unit.refs, kind, params)
        out.append(ClusterResolution(cl.id, kind, pairs, disjoint, retraced=retraced, scores=scores))

    for cl in degenerate:
        refs = tuple((cl.id, i) for i in range(cl.rank))
        out.append(ClusterResolution(cl.id, ClusterKind.DEGENERATE, (), refs))
    return out
