"""Perturb the weight tables at increasing noise levels and print box-plot statistics of theta."""

from __future__ import annotations

import argparse

from trajrec.evaluation.corpus import CorpusConfig, random_corpus
from trajrec.evaluation.sweeps import DEFAULT_ETAS, Evaluator, stability_sweep
from trajrec.params import ParamSet


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=CorpusConfig.n_images)
    ap.add_argument("--seed", type=int, default=CorpusConfig.seed)
    ap.add_argument("--repetitions", type=int, default=10)
    args = ap.parse_args()
    ev = Evaluator(random_corpus(CorpusConfig(n_images=args.n, seed=args.seed)))
    print(f"baseline theta {ev.theta(ParamSet()):.4f}")
    print("eta,min,q1,median,q3,max")
    for r in stability_sweep(ev, ParamSet(), DEFAULT_ETAS, args.repetitions, seed=args.seed):
        print(f"{r.eta:g},{min(r.thetas):.4f},{r.q1:.4f},{r.median:.4f},{r.q3:.4f},{max(r.thetas):.4f}")


if __name__ == "__main__":
    main()
