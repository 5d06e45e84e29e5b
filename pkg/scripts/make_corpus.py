"""Write the seeded synthetic corpus (PBM skeleton, ground-truth order, on-line source) to a directory."""

from __future__ import annotations

import argparse
from pathlib import Path

from trajrec.cli import write_sample
from trajrec.evaluation.corpus import CorpusConfig, golden_fixtures, random_corpus


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("out", type=Path)
    ap.add_argument("--n", type=int, default=CorpusConfig.n_images)
    ap.add_argument("--seed", type=int, default=CorpusConfig.seed)
    ap.add_argument("--fixtures", action="store_true", help="also write the hand-built fixtures")
    args = ap.parse_args()
    samples = random_corpus(CorpusConfig(n_images=args.n, seed=args.seed))
    if args.fixtures:
        samples = golden_fixtures() + samples
    for s in samples:
        write_sample(s, args.out)
    print(f"wrote {len(samples)} samples to {args.out}")


if __name__ == "__main__":
    main()
