"""Solve reports and residual evaluation against the original equation."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .box import box_on_fiber
from .fibers import FiberFunction, Mode, ProblemSpec, encode_fiber, find_fiber


@dataclass
class SolveReport:
    u: list[FiberFunction]
    residual_max: float
    residual_rel: float
    determinants: dict[str, tuple[float, float]]
    mode: Mode
    method: str = ""
    # Range mode: the unique extension of the data, with p / q filled in.
    f_extended: list[FiberFunction] | None = None
    diagnostics: dict = field(default_factory=dict)

    def u_on(self, offset: float) -> FiberFunction:
        for fib in self.u:
            if fib.offset == offset:
                return fib
        raise KeyError(offset)

    def to_dict(self) -> dict:
        out = {
            "mode": self.mode.value,
            "method": self.method,
            "residual_max": self.residual_max,
            "residual_rel": self.residual_rel,
            "determinants": {k: {"abs_det": a, "sv_ratio": r} for k, (a, r) in self.determinants.items()},
            "u": [encode_fiber(fib, "u") for fib in self.u],
        }
        if self.f_extended is not None:
            out["f_extended"] = [encode_fiber(fib, "f") for fib in self.f_extended]
        if self.diagnostics:
            out["diagnostics"] = self.diagnostics
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)


def fiber_residuals(problem: ProblemSpec, u: FiberFunction, f: FiberFunction) -> np.ndarray:
    """Per-index residual vectors of the equation on one fiber.

    Solve mode: ``alpha u + box u - f`` over every index ``f`` carries.
    Range mode: ``box u - f`` over ``f``'s indices (the extended data).
    """
    kernel, window = problem.kernel, problem.window
    boxu = box_on_fiber(u.restrict(0, window.ell(u.offset)), kernel, window, f.n_lo, f.n_hi)
    res = boxu.values - f.values
    if problem.mode is Mode.SOLVE:
        res = res + np.array([kernel.alpha @ u[n] for n in f.indices()])
    return res


def residual_norms(problem: ProblemSpec, u_fibers, f_fibers) -> tuple[float, float]:
    """``(max grid-point residual norm, that / (1 + max ||f||))``."""
    worst, fmax = 0.0, 0.0
    for f in f_fibers:
        u = find_fiber(u_fibers, f.offset, problem.window)
        r = fiber_residuals(problem, u, f)
        if r.size:
            worst = max(worst, float(np.linalg.norm(r, axis=1).max()))
        fmax = max(fmax, float(np.linalg.norm(f.values, axis=1).max()))
    return worst, worst / (1.0 + fmax)
