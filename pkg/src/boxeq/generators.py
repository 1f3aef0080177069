"""Seeded random problem instances and hand-built special cases."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .box import box_on_fiber
from .fibers import FiberFunction, Kernel, Mode, ProblemSpec, Window
from .words import complex_gaussian


@dataclass(frozen=True)
class RandomProblemConfig:
    d: int = 1
    N: int = 1
    M: int = 4
    mode: Mode = Mode.SOLVE
    n_fibers: int = 2
    epsilon: float = 0.5
    # Off-leading coefficients are scaled down so the step matrices stay tame.
    coupling: float = 0.5
    exterior_pad: int = 1


def random_kernel(rng: np.random.Generator, d: int, N: int, mode: Mode = Mode.SOLVE, coupling: float = 0.5) -> Kernel:
    eye = np.eye(d)
    c = {k: coupling * complex_gaussian(rng, (d, d)) / np.sqrt(d) for k in range(-N, N + 1)}
    c[N] = eye + 0.3 * complex_gaussian(rng, (d, d)) / np.sqrt(d)
    c[-N] = eye + 0.3 * complex_gaussian(rng, (d, d)) / np.sqrt(d)
    if Mode(mode) is Mode.SOLVE:
        alpha = eye + 0.5 * complex_gaussian(rng, (d, d)) / np.sqrt(d)
    else:
        alpha = np.zeros((d, d))
    return Kernel.from_dict(alpha, c, N)


def random_window(rng: np.random.Generator, M: int, epsilon: float = 0.5) -> Window:
    t0 = float(rng.uniform(-1.0, 1.0))
    frac = float(rng.uniform(0.1, 0.9))
    return Window(t0, t0 + (M + frac) * epsilon, epsilon)


def random_offsets(rng: np.random.Generator, window: Window, count: int) -> list[float]:
    offs = [0.0] + sorted(float(x) for x in rng.uniform(0.0, window.epsilon, size=max(count - 1, 0)))
    return offs[:count]


def random_problem(rng: np.random.Generator, cfg: RandomProblemConfig = RandomProblemConfig()) -> ProblemSpec:
    mode = Mode(cfg.mode)
    kernel = random_kernel(rng, cfg.d, cfg.N, mode, cfg.coupling)
    window = random_window(rng, cfg.M, cfg.epsilon)
    rhs = []
    for off in random_offsets(rng, window, cfg.n_fibers):
        ell = window.ell(off)
        if mode is Mode.SOLVE:
            lo, hi = -cfg.N - cfg.exterior_pad, ell + cfg.N + cfg.exterior_pad
        else:
            lo, hi = 0, ell
        rhs.append(FiberFunction(off, lo, complex_gaussian(rng, (hi - lo + 1, cfg.d))))
    return ProblemSpec(kernel, window, tuple(rhs), mode)


def with_rhs(problem: ProblemSpec, rhs) -> ProblemSpec:
    return ProblemSpec(problem.kernel, problem.window, tuple(rhs), problem.mode, problem.sv_threshold)


def zero_rhs(problem: ProblemSpec) -> ProblemSpec:
    return with_rhs(problem, [FiberFunction(f.offset, f.n_lo, np.zeros_like(f.values)) for f in problem.rhs])


@dataclass(frozen=True)
class RoundTrip:
    """A range problem built from a known preimage: ``g = (box u0)|[t0, tf]``."""

    problem: ProblemSpec
    u0: tuple[FiberFunction, ...]
    box_u0: tuple[FiberFunction, ...]


def range_round_trip(rng: np.random.Generator, d: int, N: int, M: int, n_fibers: int = 2) -> RoundTrip:
    kernel = random_kernel(rng, d, N, Mode.RANGE)
    window = random_window(rng, M)
    u0, boxu, rhs = [], [], []
    for off in random_offsets(rng, window, n_fibers):
        ell = window.ell(off)
        u = FiberFunction(off, 0, complex_gaussian(rng, (ell + 1, d)))
        b = box_on_fiber(u, kernel, window)
        u0.append(u)
        boxu.append(b)
        rhs.append(b.restrict(0, ell))
    return RoundTrip(ProblemSpec(kernel, window, tuple(rhs), Mode.RANGE), tuple(u0), tuple(boxu))


def root_of_unity_instance(mode: Mode = Mode.SOLVE) -> ProblemSpec:
    """Scalar N = 1 data with ``delta_4 = 0`` exactly on the offset-0 fiber.

    ``beta = 2``, ``gamma = -2``: the characteristic roots ``1 +- i`` have
    ratio ``i``, a 4th root of unity, and ``ell = 2`` there.
    """
    window = Window(0.0, 2.0, 1.0)
    if Mode(mode) is Mode.SOLVE:
        # beta = -(alpha + c0) / c1, gamma = -c_-1 / c1
        kernel = Kernel.from_dict(np.eye(1), {-1: [[2.0]], 0: [[-3.0]], 1: [[1.0]]})
        f = FiberFunction(0.0, -1, np.ones((5, 1)))
    else:
        kernel = Kernel.from_dict(np.zeros((1, 1)), {-1: [[2.0]], 0: [[-2.0]], 1: [[1.0]]})
        f = FiberFunction(0.0, 0, np.ones((3, 1)))
    return ProblemSpec(kernel, window, (f,), mode)
