"""Scalar N = 1 kernels along the circle of root ratios.

With ``beta``, ``gamma`` chosen so the characteristic roots have ratio
``exp(i phi)``, ``delta_{ell+2}`` vanishes when ``phi`` is a multiple of
``2 pi / (ell + 2)``. The scan shows the sv ratio of theta dropping to zero
exactly there, for both the structured solver and the dense oracle.

    python scripts/root_of_unity_scan.py --ell 2 --points 16
"""

import argparse
import cmath

import numpy as np

from boxeq.errors import SingularSystem
from boxeq.fibers import FiberFunction, Kernel, ProblemSpec, Window
from boxeq.oracle import solve_dense
from boxeq.solver import solve_n1


def kernel_for(phi, radius=1.0):
    lam_p, lam_m = radius * cmath.exp(0.5j * phi), radius * cmath.exp(-0.5j * phi)
    beta, gamma = lam_p + lam_m, -lam_p * lam_m
    # beta = -(alpha + c0) / c1 and gamma = -c_-1 / c1 with alpha = c1 = 1
    return Kernel.from_dict(np.eye(1), {-1: [[-gamma]], 0: [[-beta - 1]], 1: [[1.0]]})


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--ell", type=int, default=2)
    ap.add_argument("--points", type=int, default=16)
    args = ap.parse_args()
    window = Window(0.0, float(args.ell), 1.0)
    f = FiberFunction(0.0, -1, np.ones((args.ell + 3, 1)))
    n = args.ell + 2
    for i in range(args.points + 1):
        phi = 2 * np.pi * i / args.points
        p = ProblemSpec(kernel_for(phi), window, (f,))
        cells = []
        for name, fn in (("solver", solve_n1), ("oracle", solve_dense)):
            try:
                rep = fn(p)
                cells.append(f"{name} ok  (ratio {min(r for _, r in rep.determinants.values()):.1e})")
            except SingularSystem as exc:
                cells.append(f"{name} SINGULAR ({exc.ratio:.1e})")
        mark = "*" if (i * n) % args.points == 0 else " "
        print(f"{mark} phi = {phi:6.3f}  " + "  ".join(cells))


if __name__ == "__main__":
    main()
