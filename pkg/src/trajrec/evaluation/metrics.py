"""Trajectory comparison metrics, complexity score and component-count ABC."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.interpolate import CubicSpline

SNR_CAP_DB = 120.0
# complexity weights in tenths, so the weighted count is one correctly rounded division
COMPLEXITY_TENTHS = (6, 3, 1)
COMPLEXITY_COEFFS = tuple(w / 10 for w in COMPLEXITY_TENTHS)


def _as_points(seq) -> np.ndarray:
    arr = np.asarray(seq, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError(f"expected an (n, 2) point array, got shape {arr.shape}")
    return arr


def resample(seq, n: int) -> np.ndarray:
    """Natural cubic spline through the points, parameterized by arc length, at ``n`` even steps."""
    pts = _as_points(seq)
    keep = np.ones(len(pts), dtype=bool)
    keep[1:] = np.any(np.diff(pts, axis=0) != 0, axis=1)
    pts = pts[keep]
    if len(pts) < 2:
        raise ValueError("degenerate trajectory: fewer than two distinct points")
    t = np.concatenate([[0.0], np.cumsum(np.hypot(*np.diff(pts, axis=0).T))])
    t /= t[-1]
    spline = CubicSpline(t, pts, bc_type="natural", axis=0)
    return spline(np.linspace(0.0, 1.0, n))


def min_max_scale(pts: np.ndarray) -> np.ndarray:
    """Shift to the origin and divide both axes by the larger span (aspect preserved)."""
    lo = pts.min(axis=0)
    span = float((pts.max(axis=0) - lo).max())
    if span == 0.0:
        raise ValueError("degenerate trajectory: zero span")
    return (pts - lo) / span


def normalize_pair(real, recovered) -> tuple[np.ndarray, np.ndarray]:
    real = _as_points(real)
    recovered = _as_points(recovered)
    if len(real) < 2 or len(recovered) < 2:
        raise ValueError("both sequences need at least two points")
    n = len(real)
    return min_max_scale(resample(real, n)), min_max_scale(resample(recovered, n))


def _check_lengths(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise ValueError(f"length mismatch: {len(a)} vs {len(b)}")


def rmse(real, recovered) -> float:
    a, b = _as_points(real), _as_points(recovered)
    _check_lengths(a, b)
    return float(np.sqrt(np.sum((a - b) ** 2) / len(a)))


def snr(real, recovered) -> float:
    """Signal energy about the real centroid over error energy, in dB."""
    a, b = _as_points(real), _as_points(recovered)
    _check_lengths(a, b)
    signal = float(np.sum((a - a.mean(axis=0)) ** 2))
    if signal == 0.0:
        raise ValueError("zero signal variance")
    noise = float(np.sum((a - b) ** 2))
    if noise == 0.0:
        return SNR_CAP_DB
    return min(SNR_CAP_DB, 10.0 * np.log10(signal / noise))


def dtw(real, recovered) -> float:
    """Accumulated Euclidean DTW distance, filled one anti-diagonal at a time."""
    a, b = _as_points(real), _as_points(recovered)
    if len(a) == 0 or len(b) == 0:
        raise ValueError("dtw of an empty sequence")
    n, m = len(a), len(b)
    cost = np.sqrt(((a[:, None, :] - b[None, :, :]) ** 2).sum(axis=2))
    acc = np.full((n + 1, m + 1), np.inf)
    acc[0, 0] = 0.0
    for k in range(2, n + m + 1):
        i = np.arange(max(1, k - m), min(n, k - 1) + 1)
        j = k - i
        best = np.minimum(np.minimum(acc[i - 1, j], acc[i, j - 1]), acc[i - 1, j - 1])
        acc[i, j] = cost[i - 1, j - 1] + best
    return float(acc[n, m])


def complexity(n_components: int, n_rank3: int, n_rank_gt3: int) -> float:
    if min(n_components, n_rank3, n_rank_gt3) < 0:
        raise ValueError("counts must be non-negative")
    a1, a2, a3 = COMPLEXITY_TENTHS
    return (a1 * n_components + a2 * n_rank3 + a3 * n_rank_gt3) / 10


@dataclass(frozen=True)
class Bands:
    """Tertile thresholds over a corpus's complexity values."""

    low_max: float
    medium_max: float

    @classmethod
    def from_values(cls, values: Sequence[float]) -> "Bands":
        if len(values) == 0:
            raise ValueError("cannot band an empty corpus")
        q1, q2 = np.quantile(np.asarray(values, dtype=float), [1 / 3, 2 / 3])
        return cls(float(q1), float(q2))

    def band(self, value: float) -> str:
        if value <= self.low_max:
            return "low"
        return "medium" if value <= self.medium_max else "high"


def component_count_abc(real_counts: Sequence[int], est_counts: Sequence[int]) -> float:
    """L1 distance between the normalized histograms of per-image component counts."""
    if len(real_counts) == 0 or len(est_counts) == 0:
        raise ValueError("empty corpus")
    if len(real_counts) != len(est_counts):
        raise ValueError("real and estimated corpora differ in size")
    hr, he = Counter(real_counts), Counter(est_counts)
    nr, ne = len(real_counts), len(est_counts)
    return float(sum(abs(hr[k] / nr - he[k] / ne) for k in set(hr) | set(he)))


@dataclass(frozen=True)
class MetricReport:
    rmse: float
    snr: float
    dtw: float
    complexity: float
    complexity_band: str = ""


def compare(real, recovered) -> tuple[float, float, float]:
    """RMSE, SNR and DTW after normalizing both sequences."""
    a, b = normalize_pair(real, recovered)
    return rmse(a, b), snr(a, b), dtw(a, b)
