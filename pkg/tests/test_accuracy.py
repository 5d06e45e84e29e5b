from __future__ import annotations

from dataclasses import replace

from trajrec.evaluation.accuracy import AccuracyReport, cluster_accuracy, ground_truth_pairing
from trajrec.evaluation.corpus import _line_through, make_sample
from trajrec.pairing import Pair, resolve_all
from trajrec.params import ParamSet
from trajrec.skeleton import analyze

P = ParamSet()


def swapped(res):
    """The other perfect matching of a 4-branch resolution."""
    (a, b), (c, d) = [(p.a, p.b) for p in res.pairs]
    return replace(res, pairs=(Pair(a, c, ()), Pair(b, d, ())))


def test_plus_solved_only_with_opposite_arms(fixtures):
    sample = fixtures["plus"]
    skel = analyze(sample.image)
    (res,) = resolve_all(skel, P)
    good = cluster_accuracy(skel, [res], sample.strokes)
    assert (good.solved, good.total, good.theta) == (1, 1, 1.0)
    bad = cluster_accuracy(skel, [swapped(res)], sample.strokes)
    assert (bad.solved, bad.total, bad.theta) == (0, 1, 0.0)
    assert bad.per_rank == {4: [0, 1]} and bad.per_kind == {"EvenRank": [0, 1]}


def test_no_clusters_is_vacuous(fixtures):
    sample = fixtures["line"]
    rep = cluster_accuracy(analyze(sample.image), [], sample.strokes)
    assert rep.total == 0 and rep.theta == 1.0


def test_coupled_counts_both_clusters(fixtures):
    sample = fixtures["coupled"]
    skel = analyze(sample.image)
    rep = cluster_accuracy(skel, resolve_all(skel, P), sample.strokes)
    assert (rep.solved, rep.total) == (2, 2)
    assert rep.per_rank == {3: [2, 2]}


def test_t_stem_is_a_terminal(fixtures):
    sample = fixtures["tshape"]
    skel = analyze(sample.image)
    (res,) = resolve_all(skel, P)
    gt = ground_truth_pairing(skel, res, sample.strokes)
    assert gt.pairs == res.pair_keys()
    assert gt.terminals == frozenset(res.disjoint)


def test_misaligned_passage_is_excluded(fixtures):
    sample = fixtures["plus"]
    skel = analyze(sample.image)
    res = resolve_all(skel, P)
    inside = set(skel.clusters[0].points)
    first = sample.strokes[0]
    k = next(i for i, p in enumerate(first) if p in inside)
    # jump into the cluster from nowhere
    broken = [first[:k - 1] + [(0, 0)] + first[k:], sample.strokes[1]]
    rep = cluster_accuracy(skel, res, broken)
    assert rep.excluded == 1 and rep.total == 0 and len(rep.failures) == 1
    assert "not a branch" in rep.failures[0]


def test_merge_adds_counts():
    a = AccuracyReport(1, 2, 0, {4: [1, 2]}, {"EvenRank": [1, 2]}, ["x"])
    b = AccuracyReport(3, 3, 1, {4: [1, 1], 3: [2, 2]}, {"TPattern": [3, 3]}, ["y"])
    m = a.merge(b)
    assert (m.solved, m.total, m.excluded) == (4, 5, 1)
    assert m.per_rank == {4: [2, 3], 3: [2, 2]}
    assert m.per_kind == {"EvenRank": [1, 2], "TPattern": [3, 3]}
    assert m.failures == ["x", "y"]
    assert a.per_rank == {4: [1, 2]}  # inputs untouched


def test_twenty_cluster_sheet_against_a_hand_count():
    # 20 separate crossings on a 5 x 4 grid, crossing angles cycling through 40..90 degrees
    strokes = []
    angles = [40, 55, 70, 90]
    for k in range(20):
        cx, cy = 30 + 60 * (k % 5), 30 + 60 * (k // 5)
        strokes.append(_line_through((cx, cy), 0, 22))
        strokes.append(_line_through((cx, cy), angles[k % 4], 22))
    sample = make_sample("sheet", strokes)
    skel = analyze(sample.image)
    assert len(skel.clusters) == 20
    res = resolve_all(skel, P)
    assert cluster_accuracy(skel, res, sample.strokes).theta == 1.0
    # sabotage every fourth resolution: by construction exactly 15 of 20 stay correct
    sabotaged = [swapped(r) if i % 4 == 0 else r for i, r in enumerate(res)]
    rep = cluster_accuracy(skel, sabotaged, sample.strokes)
    assert (rep.solved, rep.total) == (15, 20)
    assert rep.theta == 0.75
