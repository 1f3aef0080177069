"""Closed-form solutions of matrix linear recurrences.

``w_{n+1} = M_n w_n + g_n`` is solved by ordered left products
``M_m M_{m-1} ... M_0``; products are accumulated in index order and never
reassociated.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ._linalg import check_same_square
from .words import delta_seq


@dataclass(frozen=True)
class LeftProductChain:
    """The ordered product ``factors[-1] @ ... @ factors[0]``; empty means identity."""

    factors: tuple[np.ndarray, ...] = ()
    size: int | None = None

    def __post_init__(self):
        facs = tuple(np.asarray(f, dtype=complex) for f in self.factors)
        if facs:
            s = check_same_square(*facs)
            if self.size is not None and self.size != s:
                raise ValueError(f"factor size {s} != declared size {self.size}")
            object.__setattr__(self, "size", s)
        elif self.size is None:
            raise ValueError("an empty chain needs an explicit size")
        object.__setattr__(self, "factors", facs)

    def product(self, start: int = 0, stop: int | None = None) -> np.ndarray:
        """``M_{stop-1} ... M_start`` (identity when the range is empty)."""
        stop = len(self.factors) if stop is None else stop
        out = np.eye(self.size, dtype=complex)
        for k in range(start, stop):
            out = self.factors[k] @ out
        return out


def _vectors(g, n, s):
    if len(g) < n:
        raise ValueError(f"need at least {n} forcing terms, got {len(g)}")
    out = [np.asarray(v, dtype=complex) for v in g[:n]]
    for v in out:
        if v.shape != (s,):
            raise ValueError(f"forcing term has shape {v.shape}, expected ({s},)")
    return out


def solve_nonstationary(M: Sequence, g: Sequence, w0, n: int) -> np.ndarray:
    """``w_n`` for ``w_{k+1} = M_k w_k + g_k`` by the product formula."""
    w0 = np.asarray(w0, dtype=complex)
    s = w0.shape[0]
    if len(M) < n:
        raise ValueError(f"need at least {n} matrices, got {len(M)}")
    chain = LeftProductChain(tuple(M[:n]), size=s)
    g = _vectors(g, n, s)
    out = chain.product(0, n) @ w0
    for k in range(n):
        out = out + chain.product(k + 1, n) @ g[k]
    return out


def solve_stationary(M, g: Sequence, w0, n: int) -> np.ndarray:
    """``w_n = M^n w_0 + sum_k M^(n-k-1) g_k``."""
    M = np.asarray(M, dtype=complex)
    w0 = np.asarray(w0, dtype=complex)
    s = w0.shape[0]
    if M.shape != (s, s):
        raise ValueError(f"M has shape {M.shape}, expected ({s}, {s})")
    g = _vectors(g, n, s)
    powers = [np.eye(s, dtype=complex)]
    for _ in range(n):
        powers.append(M @ powers[-1])
    out = powers[n] @ w0
    for k in range(n):
        out = out + powers[n - k - 1] @ g[k]
    return out


def companion_lift(beta, gamma) -> np.ndarray:
    """The 2d x 2d block matrix ``[[beta, gamma], [I, 0]]``."""
    d = check_same_square(beta, gamma)
    out = np.zeros((2 * d, 2 * d), dtype=complex)
    out[:d, :d] = beta
    out[:d, d:] = gamma
    out[d:, :d] = np.eye(d)
    return out


@dataclass
class DeltaCache:
    """Call-local memo of ``delta_0 .. delta_n`` for one fixed ``(beta, gamma)``."""

    beta: np.ndarray
    gamma: np.ndarray
    _deltas: list[np.ndarray] = field(default_factory=list)

    def __getitem__(self, n: int) -> np.ndarray:
        if n < 0:
            raise IndexError(n)
        if n >= len(self._deltas):
            self._deltas = delta_seq(self.beta, self.gamma, max(n, 2 * len(self._deltas), 4))
        return self._deltas[n]


def solve_second_order(beta, gamma, g: Sequence, w0, w1, n: int, deltas: DeltaCache | None = None) -> np.ndarray:
    """``w_n`` for ``w_{k+1} = beta w_k + gamma w_{k-1} + g_k`` (k >= 1).

    ``g[k]`` is ``g_k``; ``g[0]`` is never read. Uses
    ``w_n = delta_n w_1 + delta_{n-1} gamma w_0 + sum_{k=1}^{n-1} delta_{n-k} g_k``.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    d = check_same_square(beta, gamma)
    w0 = np.asarray(w0, dtype=complex)
    w1 = np.asarray(w1, dtype=complex)
    if w0.shape != (d,) or w1.shape != (d,):
        raise ValueError("initial vectors must have length d")
    if deltas is None:
        deltas = DeltaCache(np.asarray(beta, dtype=complex), np.asarray(gamma, dtype=complex))
    gamma = np.asarray(gamma, dtype=complex)
    if n > 1 and len(g) < n:
        raise ValueError(f"need forcing terms up to index {n - 1}")
    out = deltas[n] @ w1 + deltas[n - 1] @ gamma @ w0
    for k in range(1, n):
        out = out + deltas[n - k] @ np.asarray(g[k], dtype=complex)
    return out
