"""Structured solver vs dense oracle over (N, d, M), with conditioned or raw Gaussian kernels.

    python scripts/accuracy_sweep.py --seeds 100 --raw
"""

import argparse
import json

import numpy as np

from boxeq.errors import SingularSystem
from boxeq.fibers import FiberFunction, Kernel, Mode, ProblemSpec
from boxeq.generators import RandomProblemConfig, random_problem, random_window
from boxeq.oracle import solve_dense
from boxeq.solver import solve
from boxeq.words import complex_gaussian


def raw_problem(rng, d, N, M, mode):
    c = {k: complex_gaussian(rng, (d, d)) for k in range(-N, N + 1)}
    alpha = complex_gaussian(rng, (d, d)) if mode is Mode.SOLVE else np.zeros((d, d))
    window = random_window(rng, M)
    ell = window.ell(0.0)
    lo, hi = (-N, ell + N) if mode is Mode.SOLVE else (0, ell)
    f = FiberFunction(0.0, lo, complex_gaussian(rng, (hi - lo + 1, d)))
    return ProblemSpec(Kernel.from_dict(alpha, c, N), window, (f,), mode)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, default=100)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--raw", action="store_true", help="unconditioned Gaussian coefficients")
    ap.add_argument("--mode", choices=[m.value for m in Mode], default="solve")
    args = ap.parse_args()
    mode = Mode(args.mode)
    rng = np.random.default_rng(args.seed)
    rows = []
    for N in (1, 2, 3):
        for d in (1, 2, 3):
            errs, singular = [], 0
            for s in range(args.seeds):
                M = 1 + s % 8
                if args.raw:
                    p = raw_problem(rng, d, N, M, mode)
                else:
                    p = random_problem(rng, RandomProblemConfig(d=d, N=N, M=M, mode=mode))
                try:
                    r, o = solve(p), solve_dense(p)
                except SingularSystem:
                    singular += 1
                    continue
                errs.append(max(np.abs(a.values - b.values).max() / max(1.0, np.abs(b.values).max())
                                for a, b in zip(r.u, o.u)))
            errs = np.array(errs) if errs else np.zeros(1)
            rows.append({"N": N, "d": d, "median": float(np.median(errs)), "max": float(errs.max()),
                         "above_1e-8": int((errs > 1e-8).sum()), "singular": singular})
            print(f"N={N} d={d}  median {np.median(errs):.1e}  max {errs.max():.1e}  "
                  f">1e-8: {(errs > 1e-8).sum():3d}  singular: {singular}")
    print(json.dumps(rows))


if __name__ == "__main__":
    main()
