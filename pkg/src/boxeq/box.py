"""The forward operator ``box u (t) = sum_k c_k u(t + k eps) chi(t + k eps)``.

Two independent evaluations are provided. :func:`apply_box_direct` sums the
stencil and gates each term with :func:`~boxeq.fibers.chi` at the real time
``t + k eps``. :func:`apply_box_piecewise` follows the case split of the
operator by time bins (zero, ramp-up near t0, full stencil, ramp-down near tf,
zero) and never calls ``chi``.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ._linalg import SV_THRESHOLD, sv_ratio
from .errors import SingularMatrix
from .fibers import FiberFunction, Kernel, Window, chi, find_fiber, fiber_of


def _as_fibers(u) -> Sequence[FiberFunction]:
    return (u,) if isinstance(u, FiberFunction) else tuple(u)


def apply_box_direct(u, kernel: Kernel, window: Window, t: float) -> np.ndarray:
    coord = fiber_of(t, window)
    fibers = _as_fibers(u)
    out = np.zeros(kernel.d, dtype=complex)
    fib = None
    for k in range(-kernel.N, kernel.N + 1):
        s = window.time(coord.offset, coord.index + k)
        if chi(s, window):
            if fib is None:
                fib = find_fiber(fibers, coord.offset, window)
            out = out + kernel.c(k) @ fib[coord.index + k]
    return out


def piecewise_stencil_range(n: int, ell: int, N: int) -> tuple[int, int] | None:
    """Stencil limits ``(k_lo, k_hi)`` at fiber index ``n``, or None where box u is zero.

    Rows ``p = 0..2N-1`` of the ramp-up bins start the sum at ``c_{N-p}``,
    rows of the ramp-down bins stop it at ``c_{p-N}``; the plateau uses the
    full stencil. When the window is shorter than the stencil both ramps
    apply at once.
    """
    if n < -N or n > ell + N:
        return None
    k_lo, k_hi = -N, N
    p_up = n + N  # ramp-up row: t0 + (p-N) eps <= t < t0 + (p+1-N) eps
    if 0 <= p_up <= 2 * N - 1:
        k_lo = N - p_up
    p_down = ell - n + N  # ramp-down row: tf + (N-p-1) eps < t <= tf + (N-p) eps
    if 0 <= p_down <= 2 * N - 1:
        k_hi = p_down - N
    if k_lo > k_hi:
        return None
    return k_lo, k_hi


def apply_box_piecewise(u, kernel: Kernel, window: Window, t: float) -> np.ndarray:
    coord = fiber_of(t, window)
    ell = window.ell(coord.offset)
    out = np.zeros(kernel.d, dtype=complex)
    lim = piecewise_stencil_range(coord.index, ell, kernel.N)
    if lim is None:
        return out
    fib = find_fiber(_as_fibers(u), coord.offset, window)
    for k in range(lim[0], lim[1] + 1):
        out = out + kernel.c(k) @ fib[coord.index + k]
    return out


def box_on_fiber(u: FiberFunction, kernel: Kernel, window: Window, lo: int | None = None, hi: int | None = None) -> FiberFunction:
    """Sampled ``box u`` on one fiber, by default over its support ``[-N, ell+N]``."""
    N, d = kernel.N, kernel.d
    ell = window.ell(u.offset)
    lo = -N if lo is None else lo
    hi = ell + N if hi is None else hi
    vals = np.zeros((hi - lo + 1, d), dtype=complex)
    for i, n in enumerate(range(lo, hi + 1)):
        for k in range(-N, N + 1):
            m = n + k
            if 0 <= m <= ell:
                vals[i] += kernel.c(k) @ u[m]
    return FiberFunction(u.offset, lo, vals)


def box_support_bounds(kernel: Kernel, window: Window) -> tuple[float, float]:
    return window.t0 - kernel.N * window.epsilon, window.tf + kernel.N * window.epsilon


def discontinuity_budget(kernel: Kernel | int, p: int) -> int:
    """Upper bound on the jumps of ``box u`` when ``u`` has ``p`` of them."""
    if p < 0:
        raise ValueError("p must be >= 0")
    N = kernel if isinstance(kernel, int) else kernel.N
    return (4 * N + 2) + (2 * N + 1) * p


def recover_on_window(boxu: FiberFunction, kernel: Kernel, window: Window, threshold: float = SV_THRESHOLD) -> FiberFunction:
    """Rebuild ``u`` on ``[t0, tf]`` from sampled ``box u`` by forward substitution.

    Uses ``c_N`` from the left end when it is invertible, otherwise ``c_{-N}``
    from the right end; raises :class:`SingularMatrix` when neither is.
    """
    N, d = kernel.N, kernel.d
    ell = window.ell(boxu.offset)
    u = np.zeros((ell + 1, d), dtype=complex)
    if sv_ratio(kernel.c(N)) >= threshold:
        cN = kernel.c(N)
        for m in range(ell + 1):
            n = m - N  # the equation at n is the first one containing u_m
            acc = np.array(boxu[n], dtype=complex)
            for k in range(-N, N):
                j = n + k
                if 0 <= j < m:
                    acc -= kernel.c(k) @ u[j]
            u[m] = np.linalg.solve(cN, acc)
    elif sv_ratio(kernel.c(-N)) >= threshold:
        cmN = kernel.c(-N)
        for m in range(ell, -1, -1):
            n = m + N
            acc = np.array(boxu[n], dtype=complex)
            for k in range(-N + 1, N + 1):
                j = n + k
                if m < j <= ell:
                    acc -= kernel.c(k) @ u[j]
            u[m] = np.linalg.solve(cmN, acc)
    else:
        raise SingularMatrix("c_N and c_-N", max(sv_ratio(kernel.c(N)), sv_ratio(kernel.c(-N))), threshold)
    return FiberFunction(boxu.offset, 0, u)


# --- continuous-time diagnostics on step functions ------------------------------


@dataclass(frozen=True)
class StepFunction:
    """Right-continuous piecewise-constant ``u``: ``values[i]`` on ``[b_i, b_{i+1})``."""

    breakpoints: tuple[float, ...]
    values: np.ndarray  # shape (len(breakpoints) + 1, d)

    def __post_init__(self):
        b = tuple(float(x) for x in self.breakpoints)
        if list(b) != sorted(set(b)):
            raise ValueError("breakpoints must be strictly increasing")
        v = np.asarray(self.values, dtype=complex)
        if v.ndim != 2 or v.shape[0] != len(b) + 1:
            raise ValueError("need one value vector per piece")
        object.__setattr__(self, "breakpoints", b)
        object.__setattr__(self, "values", v)

    def __call__(self, x: float, side: int = 0) -> np.ndarray:
        """Value at ``x`` (side 0), left limit (side -1) or right limit (side +1)."""
        if side < 0:
            return self.values[bisect.bisect_left(self.breakpoints, x)]
        return self.values[bisect.bisect_right(self.breakpoints, x)]


def _chi_sided(s: float, window: Window, side: int) -> int:
    tol = window.time_tol
    # Snap to the endpoints so that t + k*eps lands on t0 / tf when it should.
    if abs(s - window.t0) <= tol:
        s = window.t0
    elif abs(s - window.tf) <= tol:
        s = window.tf
    if side < 0:
        return int(window.t0 < s <= window.tf)
    if side > 0:
        return int(window.t0 <= s < window.tf)
    return int(window.t0 <= s <= window.tf)


def box_step(u: StepFunction, kernel: Kernel, window: Window, t: float, side: int = 0) -> np.ndarray:
    """``box u`` at a real time, or its one-sided limit."""
    out = np.zeros(kernel.d, dtype=complex)
    for k in range(-kernel.N, kernel.N + 1):
        s = t + k * window.epsilon
        if _chi_sided(s, window, side):
            out = out + kernel.c(k) @ u(s, side)
    return out


def discontinuity_candidates(u: StepFunction, kernel: Kernel, window: Window) -> list[float]:
    N, eps = kernel.N, window.epsilon
    pts = {window.t0 + k * eps for k in range(-N, N + 1)}
    pts |= {window.tf + k * eps for k in range(-N, N + 1)}
    pts |= {b + k * eps for b in u.breakpoints for k in range(-N, N + 1)}
    return sorted(pts)


def is_continuous_at(u: StepFunction, kernel: Kernel, window: Window, t: float, rtol: float = 1e-12) -> bool:
    left, mid, right = (box_step(u, kernel, window, t, s) for s in (-1, 0, 1))
    scale = max(1.0, np.abs(left).max(), np.abs(mid).max(), np.abs(right).max())
    return bool(np.abs(left - mid).max() <= rtol * scale and np.abs(right - mid).max() <= rtol * scale)


def count_discontinuities(u: StepFunction, kernel: Kernel, window: Window) -> int:
    """Number of candidate points where ``box u`` is not continuous."""
    return sum(not is_continuous_at(u, kernel, window, t) for t in discontinuity_candidates(u, kernel, window))
