"""Structured solvers: the closed-form N = 1 procedure and the block-companion
procedure for arbitrary N, each in both modes.

All work is per fiber ``t0 + offset + n*eps``. On a fiber the window is the
index range ``0..ell`` and the equation at index ``n`` reads

    alpha u_n + sum_{|k| <= N, 0 <= n+k <= ell} c_k u_{n+k} = f_n.

Solve mode (alpha invertible): the unknown boundary layer is
``phi_k = u_{-k}``, k = 1..N. Range mode (alpha = 0): the unknowns are the
data extensions ``p_k = f_{-k}`` and ``q_k = f_{ell+k}``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._linalg import require_invertible, require_invertible_matrix
from .errors import ProblemError
from .fibers import FiberFunction, Kernel, Mode, ProblemSpec, Window, chi, fiber_of, find_fiber
from .recurrence import DeltaCache, LeftProductChain, companion_lift, solve_nonstationary
from .report import SolveReport, residual_norms


def _key(name: str, offset: float) -> str:
    return f"{name}@{offset:.17g}"


def _exterior(kernel: Kernel, alpha_inv: np.ndarray, f: FiberFunction, lo: int, hi: int, u: dict) -> None:
    # Outside the support of box u the equation is alpha u = f.
    for n, v in f.items():
        if n < lo or n > hi:
            u[n] = alpha_inv @ v


def _finish(problem, u_fibers, f_fibers, dets, method, f_ext=None, diagnostics=None) -> SolveReport:
    rmax, rrel = residual_norms(problem, u_fibers, f_fibers)
    return SolveReport(
        u=u_fibers,
        residual_max=rmax,
        residual_rel=rrel,
        determinants=dets,
        mode=problem.mode,
        method=method,
        f_extended=f_ext,
        diagnostics=diagnostics or {},
    )


def _to_fiber(offset: float, values: dict) -> FiberFunction:
    return FiberFunction.from_mapping(offset, values)


# --- N = 1 closed form ----------------------------------------------------------


def n1_coefficients(kernel: Kernel, threshold: float):
    """``(c1_inv, beta, gamma)`` with beta = -c1^-1 (alpha + c0), gamma = -c1^-1 c_-1."""
    if kernel.N != 1:
        raise ProblemError(f"closed-form solver needs N = 1, got N = {kernel.N}", "N")
    c1 = kernel.c(1)
    require_invertible_matrix(c1, "c_1", threshold)
    c1_inv = np.linalg.inv(c1)
    beta = -c1_inv @ (kernel.alpha + kernel.c(0))
    gamma = -c1_inv @ kernel.c(-1)
    return c1_inv, beta, gamma


def delta_scale(beta, gamma, n: int) -> float:
    """Size of the terms whose sum is ``delta_n``: the norm of the companion power holding it."""
    if n <= 1:
        return 1.0
    return float(np.linalg.norm(np.linalg.matrix_power(companion_lift(beta, gamma), n - 1), 2))


def theta_matrix(kernel: Kernel, ell: int, deltas: DeltaCache | None = None) -> np.ndarray:
    """Coefficient of ``phi`` left after eliminating the last window equation:
    ``c1 delta_{ell+2} c1^-1 alpha``."""
    c1_inv, beta, gamma = n1_coefficients(kernel, 0.0)
    deltas = deltas if deltas is not None else DeltaCache(beta, gamma)
    return kernel.c(1) @ deltas[ell + 2] @ c1_inv @ kernel.alpha


def eliminate_phi_coefficient(kernel: Kernel, ell: int) -> np.ndarray:
    """Coefficient of ``phi = u_{-1}`` in the last window equation, by plain elimination.

    Tracks ``a_n = d u_n / d phi`` through the window equations one index at a
    time; no delta sequence is involved.
    """
    c1_inv = np.linalg.inv(kernel.c(1))
    alpha, apc0, cm1 = kernel.alpha, kernel.alpha + kernel.c(0), kernel.c(-1)
    a = {-1: np.eye(kernel.d, dtype=complex)}
    a[0] = -c1_inv @ alpha  # equation at index -1: alpha u_-1 + c1 u_0 = f_-1
    for n in range(0, ell):
        acc = apc0 @ a[n]
        if n >= 1:
            acc = acc + cm1 @ a[n - 1]
        a[n + 1] = -c1_inv @ acc
    out = apc0 @ a[ell]
    if ell >= 1:
        out = out + cm1 @ a[ell - 1]
    return out


def _second_order_run(deltas, gamma, g, w0, w1, n_max):
    """``[w_0 .. w_{n_max}]`` of ``w_{n+1} = beta w_n + gamma w_{n-1} + g_n`` by the delta formula."""
    out = [w0]
    if n_max >= 1:
        out.append(w1)
    for n in range(2, n_max + 1):
        acc = deltas[n] @ w1 + deltas[n - 1] @ gamma @ w0
        for k in range(1, n):
            acc = acc + deltas[n - k] @ g[k]
        out.append(acc)
    return out


def _solve_fiber_n1(kernel: Kernel, window: Window, f: FiberFunction, threshold: float, deltas, c1_inv, beta, gamma):
    alpha, c0, cm1 = kernel.alpha, kernel.c(0), kernel.c(-1)
    apc0 = alpha + c0
    ell = window.ell(f.offset)
    g = [c1_inv @ f[n] for n in range(0, ell + 1)]

    # phi-free part b_n of u_n (phi = 0) for n = 0..ell
    b0 = c1_inv @ f[-1]
    b1 = c1_inv @ (f[0] - apc0 @ b0) if ell >= 1 else None
    b = _second_order_run(deltas, gamma, g, b0, b1, ell)

    theta = kernel.c(1) @ deltas[ell + 2] @ c1_inv @ alpha
    name = _key("theta", f.offset)
    scale = delta_scale(beta, gamma, ell + 2)
    _, r_delta = require_invertible(deltas[ell + 2], name, threshold, detail=f"delta_{ell + 2}", scale=scale)
    det, r_theta = require_invertible(theta, name, threshold)

    resid = f[ell] - apc0 @ b[ell]
    if ell >= 1:
        resid = resid - cm1 @ b[ell - 1]
    phi = np.linalg.solve(theta, resid)

    u0 = c1_inv @ (f[-1] - alpha @ phi)
    u1 = c1_inv @ (f[0] - apc0 @ u0) if ell >= 1 else None
    inner = _second_order_run(deltas, gamma, g, u0, u1, ell)

    u = {-1: phi}
    u.update({n: inner[n] for n in range(ell + 1)})
    u[ell + 1] = np.linalg.solve(alpha, f[ell + 1] - cm1 @ u[ell])
    _exterior(kernel, np.linalg.inv(alpha), f, -1, ell + 1, u)
    return _to_fiber(f.offset, u), {name: (det, min(r_delta, r_theta))}


def solve_n1(problem: ProblemSpec) -> SolveReport:
    """Closed-form solve for N = 1 with invertible alpha."""
    if problem.mode is not Mode.SOLVE:
        raise ProblemError("solve_n1 needs mode 'solve'", "mode")
    kernel, window, thr = problem.kernel, problem.window, problem.sv_threshold
    require_invertible_matrix(kernel.alpha, "alpha", thr)
    c1_inv, beta, gamma = n1_coefficients(kernel, thr)
    deltas = DeltaCache(beta, gamma)
    u_fibers, dets = [], {}
    for f in problem.rhs:
        u, d = _solve_fiber_n1(kernel, window, f, thr, deltas, c1_inv, beta, gamma)
        u_fibers.append(u)
        dets.update(d)
    return _finish(problem, u_fibers, problem.rhs, dets, "closed-form N=1")


def delta_integral(deltas, c1_inv, f: FiberFunction, ell: int) -> np.ndarray:
    """``sum_{k=1}^{ell-1} delta_{ell-k} c1^-1 f_k``: the discrete integral operator."""
    out = np.zeros(f.d, dtype=complex)
    for k in range(1, ell):
        out = out + deltas[ell - k] @ c1_inv @ f[k]
    return out


def _range_fiber_n1(kernel: Kernel, window: Window, g: FiberFunction, threshold: float, deltas, c1_inv, gamma):
    c1, c0, cm1 = kernel.c(1), kernel.c(0), kernel.c(-1)
    ell = window.ell(g.offset)
    name = _key("theta", g.offset)
    system = -deltas[ell + 2] @ c1_inv
    scale = delta_scale(-c1_inv @ c0, gamma, ell + 2)
    det = require_invertible(deltas[ell + 2], name, threshold, detail=f"delta_{ell + 2}", scale=scale)
    if ell == 0:
        rhs = c1_inv @ g[0]
    else:
        known = -c1 @ deltas[ell + 1] @ c1_inv @ g[0]
        known = known + c0 @ delta_integral(deltas, c1_inv, g, ell) + cm1 @ delta_integral(deltas, c1_inv, g, ell - 1)
        rhs = c1_inv @ (g[ell] - known)
    p = np.linalg.solve(system, rhs)

    u0 = c1_inv @ p
    if ell == 0:
        u = {0: u0}
        q = cm1 @ u0
    else:
        u1 = c1_inv @ g[0] - c1_inv @ c0 @ c1_inv @ p
        u = {0: u0, 1: u1}
        for n in range(2, ell + 1):
            u[n] = deltas[n] @ u1 + deltas[n - 1] @ gamma @ u0 + delta_integral(deltas, c1_inv, g, n)
        q = cm1 @ (deltas[ell] @ u1 + deltas[ell - 1] @ gamma @ u0 + delta_integral(deltas, c1_inv, g, ell))
    f_ext = {-1: p, ell + 1: q}
    f_ext.update(dict(g.items()))
    return _to_fiber(g.offset, u), _to_fiber(g.offset, f_ext), {name: det}


def solve_range_n1(problem: ProblemSpec) -> SolveReport:
    """N = 1, alpha = 0: the unique extension ``(p, g, q)`` in the range of box and its preimage on [t0, tf]."""
    if problem.mode is not Mode.RANGE:
        raise ProblemError("solve_range_n1 needs mode 'range'", "mode")
    kernel, window, thr = problem.kernel, problem.window, problem.sv_threshold
    c1_inv, beta, gamma = n1_coefficients(kernel, thr)
    require_invertible_matrix(kernel.c(-1), "c_-1", thr)
    deltas = DeltaCache(beta, gamma)
    u_fibers, f_ext, dets = [], [], {}
    for g in problem.rhs:
        u, f, d = _range_fiber_n1(kernel, window, g, thr, deltas, c1_inv, gamma)
        u_fibers.append(u)
        f_ext.append(f)
        dets.update(d)
    return _finish(problem, u_fibers, f_ext, dets, "closed-form N=1 range", f_ext)


# --- general N: block companion ---------------------------------------------------


@dataclass(frozen=True)
class BlockCompanionState:
    """One-step transition ``U(t + eps) = A(t) U(t) + B(t)``.

    ``U(t) = (u(t+(N-1)eps), ..., u(t), ..., u(t-N eps))`` stacks 2N blocks.
    """

    kernel: Kernel
    window: Window
    cN_inv: np.ndarray
    A_interior: np.ndarray
    rhs: tuple[FiberFunction, ...] = ()

    @property
    def size(self) -> int:
        return 2 * self.kernel.N * self.kernel.d

    def _first_row(self, gate) -> np.ndarray:
        k_, d, N = self.kernel, self.kernel.d, self.kernel.N
        row = np.zeros((d, self.size), dtype=complex)
        for j in range(2 * N):
            k = N - 1 - j  # block j multiplies u(t + k eps)
            if k == 0:
                blk = k_.alpha + k_.c(0) * gate(0)
            else:
                blk = k_.c(k) * gate(k)
            row[:, j * d : (j + 1) * d] = -self.cN_inv @ blk
        return row

    def _assemble(self, first_row) -> np.ndarray:
        d = self.kernel.d
        A = np.zeros((self.size, self.size), dtype=complex)
        A[:d] = first_row
        A[d:, :-d] = np.eye(self.size - d)
        return A

    def A_index(self, n: int, ell: int) -> np.ndarray:
        """``A`` at fiber index ``n`` of a fiber whose window is ``0..ell``."""
        return self._assemble(self._first_row(lambda k: float(0 <= n + k <= ell)))

    def A(self, t: float) -> np.ndarray:
        w = self.window
        return self._assemble(self._first_row(lambda k: float(chi(t + k * w.epsilon, w))))

    def is_interior(self, n: int, ell: int) -> bool:
        N = self.kernel.N
        return n - N >= 0 and n + N - 1 <= ell

    def B_value(self, f_value) -> np.ndarray:
        out = np.zeros(self.size, dtype=complex)
        out[: self.kernel.d] = self.cN_inv @ np.asarray(f_value, dtype=complex)
        return out

    def B(self, t: float) -> np.ndarray:
        coord = fiber_of(t, self.window)
        f = find_fiber(self.rhs, coord.offset, self.window)
        return self.B_value(f[coord.index])


def build_block_companion(problem_or_kernel, window: Window | None = None, threshold: float | None = None) -> BlockCompanionState:
    if isinstance(problem_or_kernel, ProblemSpec):
        kernel, window, rhs = problem_or_kernel.kernel, problem_or_kernel.window, problem_or_kernel.rhs
        threshold = problem_or_kernel.sv_threshold if threshold is None else threshold
    else:
        kernel, rhs = problem_or_kernel, ()
        if window is None:
            raise ValueError("a window is required when building from a kernel")
    threshold = 1e-12 if threshold is None else threshold
    N = kernel.N
    require_invertible_matrix(kernel.c(N), f"c_{N}", threshold)
    cN_inv = np.linalg.inv(kernel.c(N))
    state = BlockCompanionState(kernel, window, cN_inv, np.zeros((0, 0)), tuple(rhs))
    interior = state._assemble(state._first_row(lambda k: 1.0))
    return BlockCompanionState(kernel, window, cN_inv, interior, tuple(rhs))


def transition(state: BlockCompanionState, n0: int, n: int, ell: int) -> np.ndarray:
    """``C_n``: the ordered product ``A(n0+n-1) ... A(n0)``.

    Consecutive factors in the constant region are taken as one power of
    ``A_interior``.
    """
    out = np.eye(state.size, dtype=complex)
    k = 0
    while k < n:
        m = n0 + k
        if state.is_interior(m, ell):
            run = 0
            while k + run < n and state.is_interior(n0 + k + run, ell):
                run += 1
            out = np.linalg.matrix_power(state.A_interior, run) @ out
            k += run
        else:
            out = state.A_index(m, ell) @ out
            k += 1
    return out


def forcing(state: BlockCompanionState, n0: int, n: int, ell: int, f_values) -> np.ndarray:
    """``F_n = sum_k (A(n0+n-1) ... A(n0+k+1)) B(n0+k)`` via the product formula."""
    As = [state.A_index(n0 + k, ell) for k in range(n)]
    Bs = [state.B_value(f_values(n0 + k)) for k in range(n)]
    return solve_nonstationary(As, Bs, np.zeros(state.size, dtype=complex), n)


def propagate(state: BlockCompanionState, U0, t_start: float, n: int, f: FiberFunction | None = None) -> np.ndarray:
    """``U(t_start + n eps) = C_n U(t_start) + F_n``.

    ``f`` overrides the right-hand side fiber taken from the problem.
    """
    w = state.window
    coord = fiber_of(t_start, w)
    ell = w.ell(coord.offset)
    N = state.kernel.N
    if n > 0 and coord.index + n - 1 > ell - N:
        raise ValueError(
            f"range violation: the step recurrence holds up to index {ell - N}, requested {coord.index + n - 1}"
        )
    if f is None:
        f = find_fiber(state.rhs, coord.offset, w)
    C = transition(state, coord.index, n, ell)
    F = forcing(state, coord.index, n, ell, lambda m: f[m])
    return C @ np.asarray(U0, dtype=complex) + F


def hankel_D(kernel: Kernel, ell: int, include_alpha: bool = True) -> np.ndarray:
    """``N d x 2N d`` map from ``U(ell-N+1)`` to the last N window equations.

    Row i is the equation at index ``ell-N+1+i``; column block m multiplies
    ``u_{ell-m}``. Coefficients of samples left of ``t0`` are gated out by
    chi, which only matters when ``ell < 2N - 1``; otherwise this is the block
    Hankel matrix with rows ``(c_{N-1-i}, ..., alpha + c_0, ..., c_{-N}, 0...)``.
    """
    N, d = kernel.N, kernel.d
    D = np.zeros((N * d, 2 * N * d), dtype=complex)
    for i in range(N):
        for m in range(2 * N):
            k = N - 1 - i - m
            if k < -N:
                continue
            blk = np.zeros((d, d), dtype=complex)
            if ell - m >= 0:
                blk = blk + kernel.c(k)
            if k == 0 and include_alpha:
                blk = blk + kernel.alpha
            D[i * d : (i + 1) * d, m * d : (m + 1) * d] = blk
    return D


def _propagate_window(state, U0, ell, f_values):
    """Iterate the step map from index -N; return ``{n: u_n}`` for n = 0..ell."""
    N, d = state.kernel.N, state.kernel.d
    U = U0
    out = {}
    for n in range(-N, ell - N + 1):
        U = state.A_index(n, ell) @ U + state.B_value(f_values(n))
        out[n + N] = U[:d]
    return out


def _trailing(kernel: Kernel, u: dict, n: int, ell: int) -> np.ndarray:
    """``sum_{k<0, 0<=n+k<=ell} c_k u_{n+k}`` (the box operator right of tf)."""
    acc = np.zeros(kernel.d, dtype=complex)
    for k in range(-kernel.N, 0):
        if 0 <= n + k <= ell:
            acc = acc + kernel.c(k) @ u[n + k]
    return acc


@dataclass
class FiberSystem:
    """The boundary system for phi on one fiber (solve mode)."""

    offset: float
    ell: int
    Theta1: np.ndarray
    Theta2: np.ndarray
    rhs: np.ndarray
    exterior: np.ndarray  # last N blocks of U(-N)
    scale: float = 1.0  # ||D|| ||C||, the size of what cancels inside Theta1


def phi_system(state: BlockCompanionState, f: FiberFunction) -> FiberSystem:
    kernel = state.kernel
    N, d = kernel.N, kernel.d
    ell = state.window.ell(f.offset)
    steps = ell + 1  # indices -N .. ell-N
    alpha_inv = np.linalg.inv(kernel.alpha)
    # These blocks only ever meet chi = 0 columns; alpha^-1 f is used where sampled.
    ext = np.concatenate([alpha_inv @ f.get(-N - k, np.zeros(d)) for k in range(1, N + 1)])
    C = transition(state, -N, steps, ell)
    F = forcing(state, -N, steps, ell, lambda m: f[m])
    D = hankel_D(kernel, ell)
    DC = D @ C
    rows = np.concatenate([f[ell - N + 1 + i] for i in range(N)])
    Theta1, Theta2 = DC[:, : N * d], DC[:, N * d :]
    scale = float(np.linalg.norm(D, 2) * np.linalg.norm(C, 2))
    return FiberSystem(f.offset, ell, Theta1, Theta2, rows - D @ F - Theta2 @ ext, ext, scale)


def reconstruct_solve_fiber(state: BlockCompanionState, f: FiberFunction, phi: np.ndarray, exterior: np.ndarray) -> FiberFunction:
    """Back-substitute a boundary layer ``phi = (u_{-1}, ..., u_{-N})`` into a full fiber of ``u``."""
    kernel = state.kernel
    N, d = kernel.N, kernel.d
    ell = state.window.ell(f.offset)
    U0 = np.concatenate([phi, exterior])
    u = {-(k + 1): phi[k * d : (k + 1) * d] for k in range(N)}
    u.update(_propagate_window(state, U0, ell, lambda m: f[m]))
    for n in range(ell + 1, ell + N + 1):
        u[n] = np.linalg.solve(kernel.alpha, f[n] - _trailing(kernel, u, n, ell))
    _exterior(kernel, np.linalg.inv(kernel.alpha), f, -N, ell + N, u)
    return _to_fiber(f.offset, {n: u[n] for n in f.indices()})


def solve_general(problem: ProblemSpec) -> SolveReport:
    """Block-companion solve for any N with invertible alpha and c_N."""
    if problem.mode is not Mode.SOLVE:
        raise ProblemError("solve_general needs mode 'solve'", "mode")
    thr = problem.sv_threshold
    require_invertible_matrix(problem.kernel.alpha, "alpha", thr)
    state = build_block_companion(problem)
    u_fibers, dets = [], {}
    for f in problem.rhs:
        sysm = phi_system(state, f)
        name = _key("Theta1", f.offset)
        dets[name] = require_invertible(sysm.Theta1, name, thr, scale=sysm.scale)
        phi = np.linalg.solve(sysm.Theta1, sysm.rhs)
        u_fibers.append(reconstruct_solve_fiber(state, f, phi, sysm.exterior))
    return _finish(problem, u_fibers, problem.rhs, dets, f"block-companion N={problem.N}")


def theta_range(state: BlockCompanionState, ell: int, with_scale: bool = False):
    """Block ``(i, j)``: coefficient of ``p_j = f_{-j}`` in the i-th last-window equation.

    ``-[D A(ell-N) ... A(-j+1)]_{i1} c_N^-1``, plus ``I`` where that equation
    is itself located at index ``-j`` (possible only when ``ell < N - 1``).
    The system solved is ``Theta p = D F - g_rows``. With ``with_scale``
    also return the size of the terms combined into Theta.
    """
    kernel = state.kernel
    N, d = kernel.N, kernel.d
    D = hankel_D(kernel, ell, include_alpha=False)
    Theta = np.zeros((N * d, N * d), dtype=complex)
    scale, d_norm, cn_norm = 0.0, np.linalg.norm(D, 2), np.linalg.norm(state.cN_inv, 2)
    for j in range(1, N + 1):
        col = np.zeros((N * d, d), dtype=complex)
        if -j <= ell - N:
            chain = LeftProductChain(tuple(state.A_index(m, ell) for m in range(-j + 1, ell - N + 1)), size=state.size)
            prod = chain.product()
            col = -(D @ prod)[:, :d] @ state.cN_inv
            scale = max(scale, d_norm * np.linalg.norm(prod, 2) * cn_norm)
        for i in range(N):
            if ell - N + 1 + i == -j:
                col[i * d : (i + 1) * d] += np.eye(d)
                scale = max(scale, 1.0)
        Theta[:, (j - 1) * d : j * d] = col
    return (Theta, scale) if with_scale else Theta


def solve_range_general(problem: ProblemSpec) -> SolveReport:
    """alpha = 0, any N: the extension ``(p_1..p_N, g, q_1..q_N)`` and ``u`` on [t0, tf]."""
    if problem.mode is not Mode.RANGE:
        raise ProblemError("solve_range_general needs mode 'range'", "mode")
    kernel, window, thr = problem.kernel, problem.window, problem.sv_threshold
    state = build_block_companion(problem)
    N, d = kernel.N, kernel.d
    u_fibers, f_ext, dets = [], [], {}
    for g in problem.rhs:
        ell = window.ell(g.offset)
        zero = np.zeros(d, dtype=complex)
        known = lambda m: g[m] if 0 <= m <= ell else zero  # noqa: E731
        F = forcing(state, -N, ell + 1, ell, known)
        D = hankel_D(kernel, ell, include_alpha=False)
        rows = np.concatenate([known(ell - N + 1 + i) for i in range(N)])
        Theta, scale = theta_range(state, ell, with_scale=True)
        name = _key("Theta", g.offset)
        dets[name] = require_invertible(Theta, name, thr, scale=scale)
        p = np.linalg.solve(Theta, D @ F - rows)
        p_of = {-(j + 1): p[j * d : (j + 1) * d] for j in range(N)}
        full = lambda m: p_of[m] if m < 0 else known(m)  # noqa: E731
        u = _propagate_window(state, np.zeros(state.size, dtype=complex), ell, full)
        ext = dict(p_of)
        ext.update(dict(g.items()))
        for k in range(1, N + 1):
            ext[ell + k] = _trailing(kernel, u, ell + k, ell)
        u_fibers.append(_to_fiber(g.offset, u))
        f_ext.append(_to_fiber(g.offset, ext))
    return _finish(problem, u_fibers, f_ext, dets, f"block-companion N={N} range", f_ext)


def solve(problem: ProblemSpec, method: str = "auto") -> SolveReport:
    """Dispatch on mode and N. ``method`` is ``auto``, ``closed`` (N = 1 only) or ``general``."""
    if method not in ("auto", "closed", "general"):
        raise ValueError(f"unknown method {method!r}")
    use_closed = method == "closed" or (method == "auto" and problem.N == 1)
    if problem.mode is Mode.SOLVE:
        return solve_n1(problem) if use_closed else solve_general(problem)
    return solve_range_n1(problem) if use_closed else solve_range_general(problem)
