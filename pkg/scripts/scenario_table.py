"""Mean and standard error of RMSE, SNR and DTW per scenario and complexity band on the synthetic corpus."""

from __future__ import annotations

import argparse
import statistics

from trajrec.evaluation.corpus import CorpusConfig, random_corpus
from trajrec.evaluation.metrics import Bands, compare, complexity
from trajrec.pairing import resolve_all
from trajrec.params import ParamSet
from trajrec.reconstruct import Scenario, recover
from trajrec.skeleton import analyze


def mean_se(xs: list[float]) -> str:
    if len(xs) < 2:
        return f"{xs[0]:.3f} +- 0" if xs else "-"
    return f"{statistics.fmean(xs):.3f} +- {statistics.stdev(xs) / len(xs) ** 0.5:.3f}"


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=CorpusConfig.n_images)
    ap.add_argument("--seed", type=int, default=CorpusConfig.seed)
    args = ap.parse_args()
    params = ParamSet()
    rows = []
    for s in random_corpus(CorpusConfig(n_images=args.n, seed=args.seed)):
        skel = analyze(s.image)
        res = resolve_all(skel, params)
        ranks = [c.rank for c in skel.clusters]
        cx = complexity(s.n_components, ranks.count(3), sum(r > 3 for r in ranks))
        for sc in Scenario:
            traj = recover(skel, res, params, sc, s.real_starts if sc != Scenario.ESTNC else None)
            rows.append((sc, cx, *compare(s.ground_truth_points(), traj.points())))
    bands = Bands.from_values([r[1] for r in rows if r[0] == Scenario.ESTNC])
    print("scenario,band,n,rmse,snr_db,dtw")
    for sc in Scenario:
        for band in ("low", "medium", "high", "all"):
            sel = [r for r in rows if r[0] == sc and (band == "all" or bands.band(r[1]) == band)]
            cols = [mean_se([r[k] for r in sel]) for k in (2, 3, 4)]
            print(f"{sc.value},{band},{len(sel)}," + ",".join(cols))


if __name__ == "__main__":
    main()
