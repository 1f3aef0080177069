"""Failure counts of the genericity sampler as a function of d and n_max.

    python scripts/genericity_sweep.py --trials 1000 --seed 0
"""

import argparse

from boxeq.words import sample_genericity


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--trials", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--threshold", type=float, default=1e-12)
    args = ap.parse_args()
    print(f"{'d':>3} {'n_max':>6} {'failures':>9}")
    for d in (1, 2, 3, 4):
        for n_max in (5, 10, 20, 40):
            rep = sample_genericity(d, n_max, args.trials, args.seed, args.threshold)
            print(f"{d:>3} {n_max:>6} {rep.failures:>9}")


if __name__ == "__main__":
    main()
