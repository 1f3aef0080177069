"""Brute-force reference solver.

Writes the equation out at every grid point of a fiber as one flat dense
system and hands it to LAPACK. No recurrence structure is used, so agreement
with :mod:`boxeq.solver` is independent evidence.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._linalg import abs_det, sv_ratio
from .errors import SingularSystem
from .fibers import FiberFunction, Mode, ProblemSpec, find_fiber
from .report import SolveReport, residual_norms


@dataclass(frozen=True)
class DenseSystem:
    matrix: np.ndarray
    vector: np.ndarray
    # unknowns[j] = ("u" | "f", fiber index); block j occupies columns j*d .. j*d+d-1
    unknowns: tuple[tuple[str, int], ...]
    rows: tuple[int, ...]
    d: int

    def block(self, kind: str, n: int) -> slice:
        j = self.unknowns.index((kind, n))
        return slice(j * self.d, (j + 1) * self.d)


def assemble_dense(problem: ProblemSpec, offset: float) -> DenseSystem:
    """The flat system of one fiber.

    Solve mode: unknowns ``u_n`` for ``n = -N .. ell+N``. Range mode:
    ``u_n`` for ``n = 0 .. ell`` and the exterior data ``f_n`` for
    ``n in [-N, -1] U [ell+1, ell+N]``. One equation per index ``-N .. ell+N``.
    """
    kernel, window = problem.kernel, problem.window
    N, d = kernel.N, kernel.d
    f = find_fiber(problem.rhs, offset, window)
    ell = window.ell(f.offset)
    rows = tuple(range(-N, ell + N + 1))
    if problem.mode is Mode.SOLVE:
        unknowns = tuple(("u", n) for n in rows)
    else:
        unknowns = tuple(("u", n) for n in range(0, ell + 1))
        unknowns += tuple(("f", n) for n in rows if n < 0 or n > ell)
    col = {key: j for j, key in enumerate(unknowns)}
    size = len(unknowns) * d
    if len(rows) * d != size:
        raise SingularSystem("dense", 0.0, problem.sv_threshold, detail="non-square system")
    A = np.zeros((size, size), dtype=complex)
    b = np.zeros(size, dtype=complex)
    for i, n in enumerate(rows):
        r = slice(i * d, (i + 1) * d)
        for k in range(-N, N + 1):
            m = n + k
            if 0 <= m <= ell:
                j = col[("u", m)]
                A[r, j * d : (j + 1) * d] += kernel.c(k)
        if problem.mode is Mode.SOLVE:
            j = col[("u", n)]
            A[r, j * d : (j + 1) * d] += kernel.alpha
            b[r] = f[n]
        elif 0 <= n <= ell:
            b[r] = f[n]
        else:
            j = col[("f", n)]
            A[r, j * d : (j + 1) * d] -= np.eye(d)
    return DenseSystem(A, b, unknowns, rows, d)


def solve_dense(problem: ProblemSpec) -> SolveReport:
    """Dense solve per fiber (partial pivoting); singular systems raise with their sv ratio."""
    kernel, thr = problem.kernel, problem.sv_threshold
    d = kernel.d
    u_fibers, f_ext, dets = [], [], {}
    for f in problem.rhs:
        sysm = assemble_dense(problem, f.offset)
        name = f"dense@{f.offset:.17g}"
        ratio = sv_ratio(sysm.matrix)
        if ratio < thr:
            raise SingularSystem(name, ratio, thr, detail=f"condition estimate {np.inf if ratio == 0 else 1 / ratio:.3g}")
        dets[name] = (abs_det(sysm.matrix), ratio)
        x = np.linalg.solve(sysm.matrix, sysm.vector)
        vals = {n: x[j * d : (j + 1) * d] for j, (kind, n) in enumerate(sysm.unknowns) if kind == "u"}
        if problem.mode is Mode.SOLVE:
            alpha_inv = np.linalg.inv(kernel.alpha)
            for n, v in f.items():
                if n not in vals:
                    vals[n] = alpha_inv @ v
            vals = {n: vals[n] for n in f.indices()}
        else:
            ext = dict(f.items())
            ext.update({n: x[j * d : (j + 1) * d] for j, (kind, n) in enumerate(sysm.unknowns) if kind == "f"})
            f_ext.append(FiberFunction.from_mapping(f.offset, ext))
        u_fibers.append(FiberFunction.from_mapping(f.offset, vals))
    ff = problem.rhs if problem.mode is Mode.SOLVE else f_ext
    rmax, rrel = residual_norms(problem, u_fibers, ff)
    return SolveReport(
        u=u_fibers,
        residual_max=rmax,
        residual_rel=rrel,
        determinants=dets,
        mode=problem.mode,
        method="dense oracle",
        f_extended=f_ext if problem.mode is Mode.RANGE else None,
    )
