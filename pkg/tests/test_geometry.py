from __future__ import annotations

import cmath
import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from trajrec.geometry import (
    ClusterGraph,
    UndefinedAngleError,
    circular_mean,
    cluster_shortest_path,
    curvature,
    external_angle,
    fold,
    internal_angle,
    normalize_angle,
)

STEPS = [(-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1)]


# --- oracles written straight from the step-by-step procedure -----------------------


def oracle_cmean(angles):
    z = sum(cmath.exp(1j * math.radians(a)) for a in angles)
    if abs(z) < 1e-12:
        raise UndefinedAngleError
    return normalize_angle(math.degrees(cmath.phase(z)))


def oracle_interp(seq, length):
    """Resample an (unwrapped) angle sequence to ``length`` points by hand."""
    if len(seq) == 1:
        return seq * length
    un = [seq[0]]
    for a in seq[1:]:
        d = a - un[-1]
        # an exact half-turn keeps its raw sign
        while d > 180:
            d -= 360
        while d < -180:
            d += 360
        un.append(un[-1] + d)
    out = []
    for k in range(length):
        x = k * (len(seq) - 1) / (length - 1)
        i = min(int(math.floor(x)), len(seq) - 2)
        f = x - i
        out.append(un[i] * (1 - f) + un[i + 1] * f)
    return out


def oracle_external(anchor, points, scales):
    points = list(points)[:scales]
    res = []
    for s in range(1, scales + 1):
        prev_x, prev_y = anchor[1], anchor[0]
        seq = []
        i = 0
        while i < len(points):
            y, x = points[i]
            seq.append(math.degrees(math.atan2(prev_y - y, prev_x - x)))
            prev_x, prev_y = x, y
            i += s
        res.append(oracle_cmean(oracle_interp(seq, scales)))
    return oracle_cmean(res)


def oracle_curvature(path, n_points):
    m = len(path)
    if m <= 2:
        return 0.0
    n = min(n_points, m)
    idx = [int(math.floor(1 + k * (m - 1) / (n - 1))) - 1 for k in range(n)]
    pts = [path[i] for i in idx]

    def ang(a, b):  # direction of b -> a
        return math.degrees(math.atan2(a[0] - b[0], a[1] - b[1]))

    rho = []
    for l in range(n):
        means = []
        for a in range(1, n_points + 1):
            vs = []
            for b in range(1, min(l, a) + 1):
                vs.append(ang(pts[l - b], pts[l]))
            for f in range(1, min(n - 1 - l, a) + 1):
                vs.append(ang(pts[l], pts[l + f]))
            try:
                means.append(oracle_cmean(vs))
            except UndefinedAngleError:
                pass
        if means:
            try:
                rho.append(oracle_cmean(means))
            except UndefinedAngleError:
                pass
    if len(rho) < 2:
        return 0.0
    return max(min(abs(b - a) % 360, 360 - abs(b - a) % 360) for a, b in zip(rho, rho[1:]))


def random_walk(seed: int, length: int, allow_back: bool = False):
    rng = np.random.default_rng(seed)
    p = (50, 50)
    out = [p]
    seen = {p}
    while len(out) < length:
        options = [(p[0] + dr, p[1] + dc) for dr, dc in STEPS]
        options = [q for q in options if allow_back or q not in seen]
        if not options:
            break
        p = options[int(rng.integers(len(options)))]
        out.append(p)
        seen.add(p)
    return out


def has_half_turn(anchor, points, scales):
    points = list(points)[:scales]
    for s in range(1, scales + 1):
        seq, prev = [], anchor
        for p in points[::s]:
            seq.append(math.degrees(math.atan2(prev[0] - p[0], prev[1] - p[1])))
            prev = p
        if any(fold(b - a) == 180 for a, b in zip(seq, seq[1:])):
            return True
    return False


walks = st.tuples(st.integers(0, 2**31), st.integers(2, 25)).map(lambda t: random_walk(*t))


def angle_close(a, b, tol=1e-9):
    return fold(a - b) <= tol


# --- circular statistics ------------------------------------------------------------------


def test_circular_mean_examples():
    assert circular_mean([10, 20]) == pytest.approx(15)
    assert circular_mean([170, -170]) == -180.0
    with pytest.raises(UndefinedAngleError):
        circular_mean([0, 90, 180, -90])
    with pytest.raises(UndefinedAngleError):
        circular_mean([])


@given(st.lists(st.floats(-1000, 1000), min_size=1, max_size=8))
def test_circular_mean_matches_complex_sum(angles):
    try:
        want = oracle_cmean(angles)
    except UndefinedAngleError:
        return
    got = circular_mean(angles)
    assert -180 <= got < 180
    if abs(sum(cmath.exp(1j * math.radians(a)) for a in angles)) > 1e-6:
        assert angle_close(got, want, 1e-6)


@given(st.floats(-1e4, 1e4))
def test_normalize_and_fold_ranges(a):
    assert -180 <= normalize_angle(a) < 180
    assert 0 <= fold(a) <= 180


# --- external angle ------------------------------------------------------------------------


def test_branch_to_the_right_points_back_left():
    anchor = (5, 5)
    assert external_angle(anchor, [(5, 6 + k) for k in range(5)], 5) == pytest.approx(-180.0)


def test_vertical_branch_hand_trace():
    # every step vector is (prev - p) = one row up: atan2(-1, 0) = -90 at all scales
    anchor = (0, 0)
    pts = [(k, 0) for k in range(1, 6)]
    assert external_angle(anchor, pts, 5) == pytest.approx(-90.0)
    assert oracle_external(anchor, pts, 5) == pytest.approx(-90.0)


def test_staircase_all_scales_agree():
    anchor = (0, 0)
    pts = [(k, k) for k in range(1, 6)]
    assert external_angle(anchor, pts, 5) == pytest.approx(-135.0)
    for s in range(1, 6):
        assert external_angle(anchor, pts, s) == pytest.approx(-135.0)


def test_empty_branch_is_an_error():
    with pytest.raises(UndefinedAngleError, match="no external direction"):
        external_angle((0, 0), [], 5)


@given(walks, st.integers(3, 7))
def test_external_angle_matches_literal_procedure(walk, scales):
    if len(walk) < 2:
        return
    anchor, pts = walk[0], walk[1:]
    try:
        want = oracle_external(anchor, pts, scales)
    except UndefinedAngleError:
        with pytest.raises(UndefinedAngleError):
            external_angle(anchor, pts, scales)
        return
    assert angle_close(external_angle(anchor, pts, scales), want, 1e-7)


@given(walks, st.integers(3, 7), st.integers(-30, 30), st.integers(-30, 30))
def test_external_angle_rotation_and_translation(walk, scales, dr, dc):
    if len(walk) < 2:
        return
    anchor, pts = walk[0], walk[1:]
    # an exact half-turn between sampled steps unwraps by its raw sign, which is not rotation-symmetric
    assume(not has_half_turn(anchor, pts, scales))
    try:
        base = external_angle(anchor, pts, scales)
    except UndefinedAngleError:
        return

    def rot(p):  # +90 degrees in the x = col, y = row frame
        return (p[1] - anchor[1] + anchor[0], -(p[0] - anchor[0]) + anchor[1])

    assert angle_close(external_angle(anchor, [rot(p) for p in pts], scales), base + 90)
    moved = [(r + dr, c + dc) for r, c in pts]
    assert angle_close(external_angle((anchor[0] + dr, anchor[1] + dc), moved, scales), base)


# --- internal angle -------------------------------------------------------------------------


def test_point_left_of_centre_points_right():
    assert internal_angle((5.0, 5.0), [(5, 2)]) == pytest.approx(0.0)


def test_symmetric_pair_averages_onto_the_ray():
    c = (0.0, 0.0)
    d = 20.0
    pts = []
    for off in (-10, 10):
        a = math.radians(180 + 30 + off)  # ray from the point to the centre points at 30 degrees
        pts.append((d * math.sin(a), d * math.cos(a)))
    assert internal_angle(c, pts) == pytest.approx(30.0)


def test_three_point_hand_computation():
    centre = (2.0, 2.0)
    pts = [(2, 4), (3, 5), (4, 6)]
    # vectors to the centre (dy, dx): (0,-2), (-1,-3), (-2,-4)
    want = oracle_cmean([math.degrees(math.atan2(0, -2)), math.degrees(math.atan2(-1, -3)), math.degrees(math.atan2(-2, -4))])
    assert internal_angle(centre, pts) == pytest.approx(want)


def test_coincident_points_skipped_or_rejected():
    assert internal_angle((1.0, 1.0), [(1, 1), (1, 3)]) == pytest.approx(-180.0)
    with pytest.raises(UndefinedAngleError):
        internal_angle((1.0, 1.0), [(1, 1)])


# --- curvature -------------------------------------------------------------------------------


def test_short_and_straight_paths_are_flat():
    assert curvature([(0, 0), (0, 1)], 10) == 0.0
    assert curvature([(0, 0)], 10) == 0.0
    assert curvature([(0, c) for c in range(20)], 10) == 0.0
    assert curvature([(k, 2 * k) for k in range(15)], 10) == 0.0
    with pytest.raises(ValueError):
        curvature([], 10)


def test_hairpin_by_literal_oracle():
    path = [(0, c) for c in range(10)] + [(1, 10)] + [(2, c) for c in range(9, -1, -1)]
    c = curvature(path, 10)
    assert c == pytest.approx(oracle_curvature(path, 10), abs=1e-9)
    # the window averages spread the reversal over several samples
    assert c == pytest.approx(40.82092923687051, abs=1e-9)


def test_sharper_bends_score_higher():
    arm = [(0, c) for c in range(10)]
    hairpin = arm + [(1, 10)] + [(2, c) for c in range(9, -1, -1)]
    right = arm + [(r, 9) for r in range(1, 10)]
    oblique = arm + [(r, 9 + r) for r in range(1, 10)]
    for n in (6, 10, 14):
        assert curvature(hairpin, n) > curvature(right, n) > curvature(oblique, n) > curvature(arm, n) == 0


def test_right_angle_corner():
    path = [(0, c) for c in range(10)] + [(r, 9) for r in range(1, 10)]
    assert curvature(path, 10) == pytest.approx(oracle_curvature(path, 10), abs=1e-9)


@given(walks, st.integers(3, 14))
def test_curvature_matches_literal_procedure(walk, n):
    assert curvature(walk, n) == pytest.approx(oracle_curvature(walk, n), abs=1e-7)


@given(st.tuples(st.integers(0, 2**31), st.integers(1, 30)).map(lambda t: random_walk(t[0], t[1], allow_back=True)), st.integers(3, 14))
def test_curvature_bounds(walk, n):
    assert 0.0 <= curvature(walk, n) <= 180.0


@given(walks, st.integers(3, 14), st.integers(-40, 40), st.integers(-40, 40))
def test_curvature_translation_invariant(walk, n, dr, dc):
    moved = [(r + dr, c + dc) for r, c in walk]
    assert curvature(moved, n) == pytest.approx(curvature(walk, n), abs=1e-9)


# --- cluster graph and shortest paths ---------------------------------------------------------


def test_graph_weights():
    g = ClusterGraph.from_pixels([(0, 0), (0, 1), (1, 1), (2, 2)])
    a = g.adjacency
    assert (a == a.T).all() and (np.diag(a) == 0).all()
    assert set(np.unique(a)) <= {0, 2, 3}
    assert a[g.index((0, 0)), g.index((0, 1))] == 2
    assert a[g.index((0, 0)), g.index((1, 1))] == 3


def test_diagonal_beats_two_straight_steps():
    g = ClusterGraph.from_pixels([(0, 0), (0, 1), (1, 1)])
    assert cluster_shortest_path(g, (0, 0), (1, 1)) == [(0, 0), (1, 1)]


def test_adjacent_anchors():
    g = ClusterGraph.from_pixels([(4, 4), (4, 5)])
    assert cluster_shortest_path(g, (4, 4), (4, 5)) == [(4, 4), (4, 5)]


def test_block_opposite_corners():
    g = ClusterGraph.from_pixels([(r, c) for r in range(3) for c in range(3)])
    path = cluster_shortest_path(g, (0, 0), (2, 2))
    assert g.path_cost(path) == 6
    assert path == [(0, 0), (1, 1), (2, 2)]


def test_disconnected_cluster_is_reported():
    g = ClusterGraph.from_pixels([(0, 0), (5, 5)])
    with pytest.raises(ValueError, match="cluster not connected"):
        cluster_shortest_path(g, (0, 0), (5, 5))


def enumerate_paths(graph: ClusterGraph, src, dst):
    nodes = graph.nodes
    out = []

    def go(path, seen):
        u = path[-1]
        if u == dst:
            out.append((graph.path_cost(path), tuple(path)))
            return
        i = graph.index(u)
        for j in np.flatnonzero(graph.adjacency[i]):
            v = nodes[j]
            if v not in seen:
                seen.add(v)
                path.append(v)
                go(path, seen)
                path.pop()
                seen.discard(v)

    go([src], {src})
    return out


def random_blob(seed: int, size: int):
    rng = np.random.default_rng(seed)
    pts = [(0, 0)]
    while len(pts) < size:
        r, c = pts[int(rng.integers(len(pts)))]
        dr, dc = STEPS[int(rng.integers(8))]
        q = (r + dr, c + dc)
        if q not in pts:
            pts.append(q)
    return pts


@given(st.integers(0, 2**31), st.integers(2, 10), st.data())
def test_dijkstra_equals_exhaustive_enumeration(seed, size, data):
    pts = random_blob(seed, size)
    g = ClusterGraph.from_pixels(pts)
    src = data.draw(st.sampled_from(sorted(pts)))
    dst = data.draw(st.sampled_from(sorted(pts)))
    got = cluster_shortest_path(g, src, dst)
    best = min(enumerate_paths(g, src, dst))
    assert g.path_cost(got) == best[0]
    assert tuple(got) == best[1]  # lexicographically smallest among the cheapest
