from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import dtw_oracle, natural_spline_oracle, rmse_oracle, snr_oracle

from trajrec.evaluation.metrics import (
    SNR_CAP_DB,
    Bands,
    compare,
    complexity,
    component_count_abc,
    dtw,
    min_max_scale,
    normalize_pair,
    resample,
    rmse,
    snr,
)

floats = st.floats(-10, 10, allow_nan=False)


def seqs(min_size=1, max_size=6):
    return st.lists(st.tuples(floats, floats), min_size=min_size, max_size=max_size)


@st.composite
def equal_pairs(draw, max_size=6):
    n = draw(st.integers(1, max_size))
    a = draw(st.lists(st.tuples(floats, floats), min_size=n, max_size=n))
    b = draw(st.lists(st.tuples(floats, floats), min_size=n, max_size=n))
    return a, b


# --- resampling and scaling --------------------------------------------------------------------


def test_three_point_polyline_to_seven_matches_spline_oracle():
    pts = np.array([[0.0, 0.0], [3.0, 4.0], [6.0, 0.0]])
    t = np.array([0.0, 5.0, 10.0]) / 10.0
    x = np.linspace(0, 1, 7)
    want = np.column_stack([natural_spline_oracle(t, pts[:, 0], x), natural_spline_oracle(t, pts[:, 1], x)])
    np.testing.assert_allclose(resample(pts, 7), want, atol=1e-12)


@given(st.lists(st.tuples(st.integers(0, 20), st.integers(0, 20)), min_size=2, max_size=8), st.integers(2, 30))
def test_resample_matches_spline_oracle(pts, n):
    arr = np.array(pts, dtype=float)
    keep = np.ones(len(arr), bool)
    keep[1:] = np.any(np.diff(arr, axis=0) != 0, axis=1)
    arr = arr[keep]
    if len(arr) < 2:
        with pytest.raises(ValueError, match="degenerate"):
            resample(pts, n)
        return
    t = np.concatenate([[0], np.cumsum(np.hypot(*np.diff(arr, axis=0).T))])
    t /= t[-1]
    x = np.linspace(0, 1, n)
    want = np.column_stack([natural_spline_oracle(t, arr[:, 0], x), natural_spline_oracle(t, arr[:, 1], x)])
    np.testing.assert_allclose(resample(pts, n), want, atol=1e-9)


def test_identical_sequences_normalize_identically():
    pts = [(0, 0), (1, 2), (3, 3), (4, 1)]
    a, b = normalize_pair(pts, pts)
    np.testing.assert_array_equal(a, b)
    assert len(a) == 4


def test_reversed_recovery_normalizes_to_the_reverse():
    pts = [(0, 0), (1, 2), (3, 3), (4, 1), (6, 2)]
    a, b = normalize_pair(pts, pts[::-1])
    np.testing.assert_allclose(b, a[::-1], atol=1e-12)


def test_normalized_length_follows_the_real_sequence():
    a, b = normalize_pair([(0, 0), (5, 5), (10, 0)], [(0, 0), (1, 1), (2, 2), (3, 3), (10, 0)])
    assert a.shape == b.shape == (3, 2)


def test_min_max_scale_keeps_aspect_ratio():
    out = min_max_scale(np.array([[2.0, 10.0], [6.0, 12.0]]))
    np.testing.assert_allclose(out, [[0, 0], [1, 0.5]])
    with pytest.raises(ValueError, match="degenerate trajectory"):
        min_max_scale(np.array([[1.0, 1.0], [1.0, 1.0]]))


def test_too_short_sequences():
    with pytest.raises(ValueError):
        normalize_pair([(0, 0)], [(0, 0), (1, 1)])


# --- RMSE / SNR / DTW -------------------------------------------------------------------------


def test_rmse_examples():
    a = np.random.default_rng(1).random((9, 2))
    assert rmse(a, a) == 0
    assert rmse(a, a + [0.1, 0.0]) == pytest.approx(0.1, abs=1e-12)
    with pytest.raises(ValueError, match="length mismatch"):
        rmse(a, a[:-1])


def test_rmse_random_length_five():
    rng = np.random.default_rng(5)
    a, b = rng.random((5, 2)), rng.random((5, 2))
    assert rmse(a, b) == pytest.approx(rmse_oracle(a.tolist(), b.tolist()), abs=1e-12)


@given(equal_pairs())
def test_rmse_oracle_and_symmetry(pair):
    a, b = pair
    assert rmse(a, b) == pytest.approx(rmse_oracle(a, b), abs=1e-12)
    assert rmse(a, b) == rmse(b, a)
    assert rmse(a, a) == 0


def test_snr_examples():
    a = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    assert snr(a, a) == SNR_CAP_DB
    # a constant guess at the centroid leaves error energy equal to signal energy
    assert snr(a, np.tile(a.mean(axis=0), (4, 1))) == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(ValueError, match="zero signal"):
        snr(np.ones((3, 2)), np.zeros((3, 2)))


def test_snr_fixture_pair():
    a = [(0.0, 0.0), (0.5, 0.2), (1.0, 0.9)]
    b = [(0.1, 0.0), (0.4, 0.3), (1.0, 0.7)]
    assert snr(a, b) == pytest.approx(snr_oracle(a, b), abs=1e-12)


@given(equal_pairs())
def test_snr_oracle(pair):
    a, b = pair
    arr = np.array(a)
    if np.sum((arr - arr.mean(axis=0)) ** 2) == 0:
        with pytest.raises(ValueError):
            snr(a, b)
        return
    if np.sum((arr - np.array(b)) ** 2) == 0:
        assert snr(a, b) == SNR_CAP_DB
        return
    want = snr_oracle(a, b)
    assert snr(a, b) == pytest.approx(min(SNR_CAP_DB, want), abs=1e-9)


def test_dtw_examples():
    a = [(0, 0), (1, 0), (2, 1)]
    assert dtw(a, a) == 0
    assert dtw([(0, 0)], [(3, 4)]) == 5
    rng = np.random.default_rng(4)
    x, y = rng.random((4, 2)), rng.random((4, 2))
    assert dtw(x, y) == pytest.approx(dtw_oracle(x.tolist(), y.tolist()), abs=1e-12)


@given(seqs(), seqs())
def test_dtw_oracle_and_symmetry(a, b):
    assert dtw(a, b) == pytest.approx(dtw_oracle(a, b), abs=1e-12)
    assert dtw(a, b) == pytest.approx(dtw(b, a), abs=1e-12)
    assert dtw(a, a) == 0
    assert dtw(a, b) >= 0


def test_dtw_empty():
    with pytest.raises(ValueError):
        dtw(np.zeros((0, 2)), [(0, 0)])


def test_exact_recovery_scores_zero():
    pts = [(r, 2 * r % 7) for r in range(12)]
    e, s, d = compare(pts, pts)
    assert e == 0 and d == 0 and s == SNR_CAP_DB


# --- complexity and bands ----------------------------------------------------------------------


def test_complexity_examples():
    assert complexity(1, 0, 0) == pytest.approx(0.6)
    assert complexity(0, 0, 0) == 0
    assert complexity(3, 4, 2) == pytest.approx(3.2)
    with pytest.raises(ValueError):
        complexity(-1, 0, 0)


counts = st.tuples(st.integers(0, 50), st.integers(0, 50), st.integers(0, 50))


@given(counts, counts)
def test_complexity_is_linear(a, b):
    s = tuple(x + y for x, y in zip(a, b))
    assert complexity(*s) == pytest.approx(complexity(*a) + complexity(*b), abs=1e-9)
    assert complexity(*a) >= 0


def test_bands_at_tertiles():
    bands = Bands.from_values([1, 2, 3, 4, 5, 6, 7, 8, 9])
    # linear-interpolated quantiles: 1 + 8/3 and 1 + 16/3
    assert bands.low_max == pytest.approx(11 / 3) and bands.medium_max == pytest.approx(19 / 3)
    assert [bands.band(v) for v in (1, 3.66, 5, 6.3, 9)] == ["low", "low", "medium", "medium", "high"]
    with pytest.raises(ValueError):
        Bands.from_values([])


# --- component-count ABC -----------------------------------------------------------------------


def test_abc_examples():
    assert component_count_abc([1, 2, 2], [2, 1, 2]) == 0
    assert component_count_abc([1, 1], [3, 3]) == 2
    assert component_count_abc([1, 1, 2], [1, 2, 2]) == pytest.approx(2 / 3, abs=1e-12)
    with pytest.raises(ValueError, match="empty"):
        component_count_abc([], [])
    with pytest.raises(ValueError, match="differ in size"):
        component_count_abc([1], [1, 2])


@given(st.integers(1, 12).flatmap(lambda n: st.tuples(st.lists(st.integers(1, 5), min_size=n, max_size=n), st.lists(st.integers(1, 5), min_size=n, max_size=n))))
def test_abc_bounds(pair):
    a, b = pair
    v = component_count_abc(a, b)
    assert -1e-12 <= v <= 2 + 1e-12
    assert (v < 1e-12) == (sorted(a) == sorted(b))
