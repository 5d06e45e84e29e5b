"""Sweep each threshold over its range and print theta per value plus the largest step."""

from __future__ import annotations

import argparse

from trajrec.evaluation.corpus import CorpusConfig, random_corpus
from trajrec.evaluation.sweeps import Evaluator, sensitivity_sweep, sweep_values
from trajrec.params import DELTA_FIELDS, ParamSet


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=CorpusConfig.n_images)
    ap.add_argument("--seed", type=int, default=CorpusConfig.seed)
    ap.add_argument("--points", type=int, default=10)
    args = ap.parse_args()
    ev = Evaluator(random_corpus(CorpusConfig(n_images=args.n, seed=args.seed)))
    params = ParamSet()
    print("delta,name,max_step,values,thetas")
    for k in sorted(DELTA_FIELDS):
        curve = sensitivity_sweep(ev, params, k, sweep_values(k, args.points))
        vals = " ".join(f"{v:g}" for v in curve.values)
        thetas = " ".join(f"{t:.4f}" for t in curve.thetas)
        print(f"{k},{curve.name},{max(curve.steps, default=0.0):.4f},{vals},{thetas}")


if __name__ == "__main__":
    main()
