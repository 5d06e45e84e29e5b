"""Cluster accuracy: does each resolution pair branches the way the pen did?"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from ..pairing import ClusterResolution
from ..skeleton import BranchRef, Pixel, Skeleton


@dataclass(frozen=True)
class GroundTruthPairing:
    pairs: frozenset[frozenset[BranchRef]]
    terminals: frozenset[BranchRef]  # passages that start or stop inside the cluster


class AlignmentError(ValueError):
    pass


def unit_pixels(skel: Skeleton, res: ClusterResolution) -> set[Pixel]:
    pts = set().union(*(skel.clusters[c].points for c in res.cluster_ids))
    if res.shared_segment is not None:
        pts |= set(skel.segments[res.shared_segment].pixels)
    return pts


def ground_truth_pairing(skel: Skeleton, res: ClusterResolution, strokes: Sequence[Sequence[Pixel]]) -> GroundTruthPairing:
    """Entry/exit branch pairs of every pen passage through the resolution's pixels."""
    inside = unit_pixels(skel, res)
    by_first: dict[Pixel, BranchRef] = {}
    for cid in res.cluster_ids:
        for idx, b in enumerate(skel.clusters[cid].branches):
            if b.first not in inside:
                by_first[b.first] = (cid, idx)
    pairs: set[frozenset[BranchRef]] = set()
    terminals: set[BranchRef] = set()
    for seq in strokes:
        i = 0
        while i < len(seq):
            if seq[i] not in inside:
                i += 1
                continue
            j = i
            while j + 1 < len(seq) and seq[j + 1] in inside:
                j += 1
            ends = []
            for k in (i - 1, j + 1):
                if 0 <= k < len(seq):
                    if seq[k] not in by_first:
                        raise AlignmentError(f"pen passage through cluster {res.cluster_id} enters at {seq[k]}, which is not a branch")
                    ends.append(by_first[seq[k]])
            if len(ends) == 2:
                if ends[0] == ends[1]:
                    raise AlignmentError(f"pen passage turns back inside cluster {res.cluster_id}")
                pairs.add(frozenset(ends))
            elif len(ends) == 1:
                terminals.add(ends[0])
            i = j + 1
    return GroundTruthPairing(frozenset(pairs), frozenset(terminals))


@dataclass
class AccuracyReport:
    solved: int = 0
    total: int = 0
    excluded: int = 0
    per_rank: dict[int, list[int]] = field(default_factory=dict)  # rank -> [solved, total]
    per_kind: dict[str, list[int]] = field(default_factory=dict)
    failures: list[str] = field(default_factory=list)

    @property
    def theta(self) -> float:
        return self.solved / self.total if self.total else 1.0

    def merge(self, other: "AccuracyReport") -> "AccuracyReport":
        out = AccuracyReport(self.solved + other.solved, self.total + other.total, self.excluded + other.excluded)
        for src in (self, other):
            for k, (s, t) in src.per_rank.items():
                cur = out.per_rank.setdefault(k, [0, 0])
                cur[0] += s
                cur[1] += t
            for k, (s, t) in src.per_kind.items():
                cur = out.per_kind.setdefault(k, [0, 0])
                cur[0] += s
                cur[1] += t
        out.failures = self.failures + other.failures
        return out


def cluster_accuracy(skel: Skeleton, resolutions: Sequence[ClusterResolution], strokes: Sequence[Sequence[Pixel]]) -> AccuracyReport:
    """A coupled resolution counts for both of its clusters."""
    report = AccuracyReport()
    for res in resolutions:
        weight = len(res.cluster_ids)
        try:
            gt = ground_truth_pairing(skel, res, strokes)
        except AlignmentError as exc:
            report.excluded += weight
            report.failures.append(str(exc))
            continue
        ok = gt.pairs == res.pair_keys()
        report.total += weight
        report.solved += weight * ok
        for cid in res.cluster_ids:
            rank = skel.clusters[cid].rank
            r = report.per_rank.setdefault(rank, [0, 0])
            r[0] += ok
            r[1] += 1
        k = report.per_kind.setdefault(res.kind.value, [0, 0])
        k[0] += weight * ok
        k[1] += weight
    return report
