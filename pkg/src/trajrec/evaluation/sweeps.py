"""One-at-a-time threshold sweeps and weight-noise stability runs over a corpus."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..pairing import resolve_all
from ..params import DELTA_FIELDS, WEIGHT_ROWS, ParamSet, WeightRow
from ..skeleton import Skeleton, analyze
from .accuracy import AccuracyReport, cluster_accuracy
from .corpus import Sample


class Evaluator:
    """Computes corpus θ while reusing skeletons and branch characterizations.

    Skeletons depend only on the branch window and the merge distance, and
    pair geometry only on those plus the curvature window; everything else
    a sweep touches is cheap to recompute.
    """

    def __init__(self, samples: Sequence[Sample]) -> None:
        self.samples = list(samples)
        self._skeletons: dict[tuple[int, int, int], Skeleton] = {}
        self._char_cache: dict[tuple[int, int, int], dict] = {}

    def skeleton(self, idx: int, params: ParamSet) -> Skeleton:
        key = (idx, params.branch_points, params.brotherhood_dist)
        if key not in self._skeletons:
            self._skeletons[key] = analyze(self.samples[idx].image, params.branch_points, params.brotherhood_dist)
            self._char_cache[key] = {}
        return self._skeletons[key]

    def accuracy(self, params: ParamSet) -> AccuracyReport:
        total = AccuracyReport()
        for idx, sample in enumerate(self.samples):
            skel = self.skeleton(idx, params)
            cache = self._char_cache[(idx, params.branch_points, params.brotherhood_dist)]
            total = total.merge(cluster_accuracy(skel, resolve_all(skel, params, cache), sample.strokes))
        return total

    def theta(self, params: ParamSet) -> float:
        return self.accuracy(params).theta


def sweep_values(index: int, n: int = 10) -> list[float]:
    lo, hi = DELTA_FIELDS[index][1]
    return sorted({float(v) for v in np.round(np.linspace(lo, hi, n))})


@dataclass(frozen=True)
class SensitivityCurve:
    index: int
    name: str
    values: tuple[float, ...]
    thetas: tuple[float, ...]

    @property
    def steps(self) -> tuple[float, ...]:
        """|Δθ| between consecutive swept values."""
        return tuple(abs(b - a) for a, b in zip(self.thetas, self.thetas[1:]))

    @property
    def grades(self) -> tuple[float, ...]:
        """Finite-difference Δθ/Δδ."""
        return tuple(
            (t1 - t0) / (v1 - v0)
            for (v0, t0), (v1, t1) in zip(zip(self.values, self.thetas), zip(self.values[1:], self.thetas[1:]))
        )


def sensitivity_sweep(evaluator: Evaluator, params: ParamSet, index: int, values: Sequence[float] | None = None) -> SensitivityCurve:
    if index not in DELTA_FIELDS:
        raise KeyError(f"no delta parameter {index}")
    values = list(values) if values is not None else sweep_values(index)
    thetas = [evaluator.theta(params.with_delta(index, v)) for v in values]
    return SensitivityCurve(index, DELTA_FIELDS[index][0], tuple(values), tuple(thetas))


def perturb_row(row: WeightRow, eta: float, rng: np.random.Generator) -> WeightRow:
    """Gaussian noise with standard deviation η·|w| per weight, renormalized to unit absolute sum."""
    if eta == 0:
        return row
    base = np.array(row.as_tuple())
    while True:
        noisy = rng.normal(base, eta * np.abs(base))
        if np.abs(noisy).sum() > 0:
            return WeightRow.normalized(*noisy.tolist())


def perturb_params(params: ParamSet, eta: float, rng: np.random.Generator) -> ParamSet:
    return params.with_weights(**{name: perturb_row(params.weights(name), eta, rng) for name in WEIGHT_ROWS})


@dataclass(frozen=True)
class StabilityRow:
    eta: float
    thetas: tuple[float, ...]
    median: float
    q1: float
    q3: float
    outliers: tuple[float, ...] = field(default=())


def box_stats(eta: float, thetas: Sequence[float]) -> StabilityRow:
    arr = np.asarray(thetas, dtype=float)
    q1, med, q3 = np.quantile(arr, [0.25, 0.5, 0.75])
    iqr = q3 - q1
    out = tuple(float(v) for v in arr if v < q1 - 1.5 * iqr or v > q3 + 1.5 * iqr)
    return StabilityRow(eta, tuple(arr.tolist()), float(med), float(q1), float(q3), out)


DEFAULT_ETAS = tuple(round(0.05 * k, 2) for k in range(1, 11))


def stability_sweep(
    evaluator: Evaluator,
    params: ParamSet,
    etas: Sequence[float] = DEFAULT_ETAS,
    repetitions: int = 10,
    seed: int = 0,
) -> list[StabilityRow]:
    if repetitions < 1:
        raise ValueError("repetitions must be at least 1")
    rng = np.random.default_rng(seed)
    rows = []
    for eta in etas:
        if eta < 0:
            raise ValueError(f"negative noise level {eta}")
        thetas = [evaluator.theta(perturb_params(params, eta, rng)) for _ in range(repetitions)]
        rows.append(box_stats(eta, thetas))
    return rows
