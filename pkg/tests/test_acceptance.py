"""Release criteria, one test each; every test records a PASS/FAIL line for the summary."""

from __future__ import annotations

import itertools
import statistics
import time
from collections import Counter
from fractions import Fraction

import numpy as np
import pytest
from oracles import dtw_oracle, rmse_oracle, snr_oracle

from trajrec.cli import main
from trajrec.evaluation.accuracy import AccuracyReport, cluster_accuracy
from trajrec.evaluation.corpus import CorpusConfig, golden_fixtures, random_corpus
from trajrec.evaluation.metrics import SNR_CAP_DB, compare, complexity, component_count_abc, dtw, rmse, snr
from trajrec.evaluation.sweeps import DEFAULT_ETAS, Evaluator, sensitivity_sweep, stability_sweep
from trajrec.pairing import resolve_all
from trajrec.params import DELTA_FIELDS, ParamSet
from trajrec.reconstruct import Scenario, recover, recover_image
from trajrec.skeleton import analyze

P = ParamSet()


@pytest.fixture(scope="module")
def evaluator(corpus):
    return Evaluator(corpus)


@pytest.fixture(scope="module")
def recoveries(corpus):
    """Recovered trajectories of the whole corpus under every scenario."""
    out = {}
    for scenario in Scenario:
        out[scenario] = [
            recover_image(s.image, P, scenario, s.real_starts if scenario != Scenario.ESTNC else None)[2] for s in corpus
        ]
    return out


def test_golden_fixtures(acceptance):
    t0 = time.perf_counter()
    report = AccuracyReport()
    wrong_kinds = []
    for sample in golden_fixtures():
        skel = analyze(sample.image)
        res = resolve_all(skel, P)
        report = report.merge(cluster_accuracy(skel, res, sample.strokes))
        kind_of = {cid: r.kind for r in res for cid in r.cluster_ids}
        got = tuple(kind_of[c.id].value for c in skel.clusters)
        if got != sample.expected_kinds:
            wrong_kinds.append(f"{sample.name}: {got} != {sample.expected_kinds}")
    elapsed = time.perf_counter() - t0
    ok = report.theta == 1.0 and not wrong_kinds and elapsed < 1.0
    acceptance(
        "golden fixtures",
        ok,
        f"theta={report.theta:.4f} ({report.solved}/{report.total}), kinds={'ok' if not wrong_kinds else wrong_kinds}, {elapsed:.2f}s (< 1 s)",
    )
    assert ok


def test_metric_oracles(acceptance):
    rng = np.random.default_rng(20240917)
    worst = 0.0
    cases = 0
    for n, m in itertools.product(range(1, 7), repeat=2):
        for _ in range(4):
            a, b = rng.uniform(-5, 5, (n, 2)).tolist(), rng.uniform(-5, 5, (m, 2)).tolist()
            worst = max(worst, abs(dtw(a, b) - dtw_oracle(a, b)))
            cases += 1
            if n == m:
                worst = max(worst, abs(rmse(a, b) - rmse_oracle(a, b)))
                if n > 1:
                    worst = max(worst, abs(snr(a, b) - min(SNR_CAP_DB, snr_oracle(a, b))))
    # weighted-count substitutions against exact rational arithmetic
    bad = [
        (c, t, h)
        for c, t, h in itertools.product(range(25), repeat=3)
        if complexity(c, t, h) != float(Fraction(6, 10) * c + Fraction(3, 10) * t + Fraction(1, 10) * h)
    ]
    ok = worst <= 1e-12 and not bad
    acceptance("metric oracles", ok, f"{cases} sequence pairs of length <= 6, max |error|={worst:.2e} (<= 1e-12); complexity mismatches={len(bad)}")
    assert ok


def test_synthetic_corpus(acceptance, corpus, recoveries):
    t0 = time.perf_counter()
    rep = random_corpus()
    theta = Evaluator(rep).theta(P)
    for scenario in Scenario:
        for s in rep:
            recover_image(s.image, P, scenario, s.real_starts if scenario != Scenario.ESTNC else None)
    elapsed = time.perf_counter() - t0
    mean_snr = {
        sc: statistics.fmean(compare(s.ground_truth_points(), t.points())[1] for s, t in zip(corpus, recoveries[sc]))
        for sc in Scenario
    }
    order = mean_snr[Scenario.RSEOC] >= mean_snr[Scenario.RSENC] >= mean_snr[Scenario.ESTNC]
    ok = len(rep) >= 100 and theta >= 0.90 and order and elapsed < 60
    snrs = ", ".join(f"{sc.value}={v:.1f} dB" for sc, v in mean_snr.items())
    acceptance("synthetic corpus", ok, f"{len(rep)} images, theta={theta:.4f} (>= 0.90), mean SNR {snrs}, {elapsed:.1f}s (< 60 s)")
    assert ok


def test_exact_recovery_identity(acceptance, corpus):
    single = random_corpus(CorpusConfig(n_images=40, seed=7, max_strokes=1, spur_probability=0.0))
    inputs = [s for s in corpus + single if s.n_components == 1 and not analyze(s.image).clusters]
    worst = 0.0
    for s in inputs:
        traj = recover_image(s.image, P, Scenario.RSEOC, s.real_starts)[2]
        e, _, d = compare(s.ground_truth_points(), traj.points())
        worst = max(worst, e, d)
    ok = len(inputs) > 0 and worst <= 1e-9
    acceptance("exact recovery", ok, f"{len(inputs)} single-component cluster-free inputs, max(RMSE, DTW)={worst:.1e} (<= 1e-9)")
    assert ok


def test_sensitivity(acceptance, evaluator):
    flat, steep = [], []
    for k in sorted(DELTA_FIELDS):
        curve = sensitivity_sweep(evaluator, P, k)
        worst = max(curve.steps, default=0.0)
        (flat if worst <= 0.02 else steep).append(f"d{k}:{worst:.3f}")
    ok = len(flat) >= 9
    acceptance("sensitivity", ok, f"{len(flat)}/11 thresholds move theta <= 0.02 per step (>= 9); above: {', '.join(steep) or 'none'}")
    assert ok


def test_stability(acceptance, evaluator):
    base = evaluator.theta(P)
    rows = stability_sweep(evaluator, P, DEFAULT_ETAS, repetitions=10, seed=20240917)
    worst = max(abs(r.median - base) for r in rows)
    ok = worst <= 0.05
    acceptance(
        "stability",
        ok,
        f"baseline theta={base:.4f}, eta up to {max(DEFAULT_ETAS)} x 10 reps, max |median - baseline|={worst:.4f} (<= 0.05), lowest single theta={min(min(r.thetas) for r in rows):.4f}",
    )
    assert ok


def test_component_count_fidelity(acceptance, corpus, recoveries):
    real = [s.n_components for s in corpus]
    est = [len(t.components) for t in recoveries[Scenario.ESTNC]]
    abc = component_count_abc(real, est)
    ok = abc <= 0.3
    acceptance("component counts", ok, f"ABC={abc:.4f} (<= 0.3), real counts {dict(sorted(Counter(real).items()))}")
    assert ok


def _adjacent(p, q) -> bool:
    return max(abs(p[0] - q[0]), abs(p[1] - q[1])) == 1


def _matching_valid(skel, resolutions) -> bool:
    seen: set[int] = set()
    for res in resolutions:
        uses = Counter(r for p in res.pairs for r in (p.a, p.b))
        if any(n != (2 if ref == res.retraced else 1) for ref, n in uses.items()):
            return False
        if set(uses) & set(res.disjoint) or seen & set(res.cluster_ids):
            return False
        owned = {(c, i) for c in res.cluster_ids for i in range(skel.clusters[c].rank)}
        if res.shared_segment is not None:
            seg = skel.segments[res.shared_segment]
            owned -= {seg.head, seg.tail}
        if res.branches != owned:
            return False
        seen |= set(res.cluster_ids)
    return seen == {c.id for c in skel.clusters}


def test_structural_invariants(acceptance, corpus, tmp_path):
    samples = golden_fixtures() + corpus
    failures = Counter()
    checked = 0
    for s in samples:
        skel = analyze(s.image)
        res = resolve_all(skel, P)
        failures["matching"] += not _matching_valid(skel, res)
        for scenario in Scenario:
            traj = recover(skel, res, P, scenario, s.real_starts if scenario != Scenario.ESTNC else None)
            checked += 1
            failures["coverage"] += set(traj.points()) != set(s.image.ink())
            failures["connectivity"] += not all(
                _adjacent(p, q) for c in traj.components for p, q in zip(c.points, c.points[1:])
            )
    # determinism through the command line: same inputs, two runs, same bytes
    gt = tmp_path / "gt"
    assert main(["synthesize", "--random", "120", "-o", str(gt)]) == 0
    runs = []
    for k in range(2):
        out = tmp_path / f"run{k}"
        assert main(["recover", str(gt), "-o", str(out), "--scenario", "rseoc"]) == 0
        runs.append({p.name: p.read_bytes() for p in sorted(out.iterdir())})
    failures["determinism"] += runs[0] != runs[1] or not runs[0]
    ok = not any(failures.values())
    acceptance(
        "structural invariants",
        ok,
        f"{checked} recoveries over {len(samples)} images; failures {dict(failures)}; {len(runs[0])} output files byte-identical across two runs",
    )
    assert ok
