"""Non-commutative words in two matrix letters and the delta_n sequence.

A word ``beta^{m1} gamma^{m2} beta^{m3} ...`` is stored by its exponent
multiplet ``(m1, m2, ...)``. Slots alternate beta/gamma starting with beta, so
a word that starts with gamma is encoded with ``m1 = 0``. That is the only
zero allowed; trailing zeros are stripped, which makes the encoding unique.

``delta_n`` is defined by ``delta_0 = 0``, ``delta_1 = I`` and
``delta_{n+1} = beta delta_n + gamma delta_{n-1}``, and expands into exactly
F_n distinct words, each with coefficient one.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Mapping

import numpy as np

from ._linalg import SV_THRESHOLD, abs_det, check_same_square, sv_ratio


@dataclass(frozen=True, order=True)
class WordMonomial:
    exponents: tuple[int, ...] = ()

    def __post_init__(self):
        e = tuple(int(m) for m in self.exponents)
        object.__setattr__(self, "exponents", e)
        if any(m < 0 for m in e):
            raise ValueError(f"negative exponent in {e}")
        if e and e[-1] == 0:
            raise ValueError(f"trailing zero exponent in {e}; use WordMonomial.canonical")
        if any(m == 0 for m in e[1:]):
            raise ValueError(f"zero interior exponent in {e}; use WordMonomial.canonical")

    @classmethod
    def canonical(cls, exponents: Iterable[int]) -> "WordMonomial":
        """Normalise any alternating multiplet, merging slots separated by zeros."""
        letters = "".join(("b" if i % 2 == 0 else "g") * int(m) for i, m in enumerate(exponents))
        return cls.from_letters(letters)

    @classmethod
    def from_letters(cls, letters: str) -> "WordMonomial":
        """``"bbg"`` -> beta^2 gamma; only the letters ``b`` and ``g`` are allowed."""
        if set(letters) - {"b", "g"}:
            raise ValueError(f"letters must be 'b' or 'g', got {letters!r}")
        return cls(_run_lengths(letters))

    @property
    def letters(self) -> str:
        return "".join(("b" if i % 2 == 0 else "g") * m for i, m in enumerate(self.exponents))

    @property
    def beta_degree(self) -> int:
        return sum(self.exponents[0::2])

    @property
    def gamma_degree(self) -> int:
        return sum(self.exponents[1::2])

    @property
    def beta_slots(self) -> int:
        return sum(1 for m in self.exponents[0::2] if m)

    @property
    def gamma_slots(self) -> int:
        return sum(1 for m in self.exponents[1::2] if m)

    @property
    def exponent_product(self) -> int:
        # Product over the occupied slots; the encoding zero of a gamma-first word is skipped.
        return math.prod(m for m in self.exponents if m)

    def __len__(self) -> int:
        return sum(self.exponents)

    def __str__(self) -> str:
        if not self.exponents:
            return "I"
        parts = []
        for i, m in enumerate(self.exponents):
            if m:
                sym = "b" if i % 2 == 0 else "g"
                parts.append(sym if m == 1 else f"{sym}^{m}")
        return "*".join(parts)


def _run_lengths(letters: str) -> tuple[int, ...]:
    exps: list[int] = []
    slot = "b"
    for ch in letters:
        if not exps:
            if ch == "g":
                exps.append(0)
                slot = "g"
            exps.append(0)
        elif ch != slot:
            exps.append(0)
        slot = ch
        exps[-1] += 1
    return tuple(exps)


def eval_word(word: WordMonomial, beta, gamma) -> np.ndarray:
    """Left-to-right product ``beta^{m1} gamma^{m2} ...``; the empty word is the identity."""
    d = check_same_square(beta, gamma)
    beta = np.asarray(beta, dtype=complex)
    gamma = np.asarray(gamma, dtype=complex)
    out = np.eye(d, dtype=complex)
    for i, m in enumerate(word.exponents):
        if m:
            out = out @ np.linalg.matrix_power(beta if i % 2 == 0 else gamma, m)
    return out


@dataclass(frozen=True)
class MatricialPolynomial:
    """Finite sum ``sum kappa * word`` with pairwise distinct words."""

    terms: tuple[tuple[complex, WordMonomial], ...] = ()

    def __post_init__(self):
        terms = tuple((complex(c), w) for c, w in self.terms)
        words = [w for _, w in terms]
        if len(set(words)) != len(words):
            raise ValueError("words in a MatricialPolynomial must be pairwise distinct")
        object.__setattr__(self, "terms", terms)

    @classmethod
    def from_mapping(cls, coeffs: Mapping[WordMonomial, complex]) -> "MatricialPolynomial":
        return cls(tuple((c, w) for w, c in sorted(coeffs.items()) if c != 0))

    @classmethod
    def from_words(cls, words: Iterable[WordMonomial], coeff: complex = 1) -> "MatricialPolynomial":
        return cls(tuple((coeff, w) for w in words))

    def as_mapping(self) -> dict[WordMonomial, complex]:
        return {w: c for c, w in self.terms}

    def __add__(self, other: "MatricialPolynomial") -> "MatricialPolynomial":
        acc = self.as_mapping()
        for c, w in other.terms:
            acc[w] = acc.get(w, 0) + c
        return MatricialPolynomial.from_mapping(acc)

    def __neg__(self) -> "MatricialPolynomial":
        return MatricialPolynomial(tuple((-c, w) for c, w in self.terms))

    def __sub__(self, other: "MatricialPolynomial") -> "MatricialPolynomial":
        return self + (-other)

    def __call__(self, beta, gamma) -> np.ndarray:
        d = check_same_square(beta, gamma)
        out = np.zeros((d, d), dtype=complex)
        for c, w in self.terms:
            out += c * eval_word(w, beta, gamma)
        return out

    def k_sums(self) -> dict[tuple[int, int], complex]:
        out: dict[tuple[int, int], complex] = {}
        for c, w in self.terms:
            key = (w.beta_degree, w.gamma_degree)
            out[key] = out.get(key, 0) + c
        return out

    def k_tilde_sums(self) -> dict[tuple[int, int, int, int], complex]:
        out: dict[tuple[int, int, int, int], complex] = {}
        for c, w in self.terms:
            key = (w.beta_degree, w.gamma_degree, w.beta_slots, w.gamma_slots)
            out[key] = out.get(key, 0) + w.exponent_product * c
        return out


def k_sum(poly: MatricialPolynomial, p: int, q: int) -> complex:
    """Sum of the coefficients of words with beta-degree p and gamma-degree q."""
    return poly.k_sums().get((p, q), 0j)


def k_tilde_sum(poly: MatricialPolynomial, p: int, q: int, r: int, s: int) -> complex:
    """Exponent-product weighted coefficient sum over words of shape (p, q, r, s).

    ``r`` and ``s`` count the occupied beta and gamma slots of a word, so only
    ``|r - s| <= 1`` can ever be nonzero.
    """
    if abs(r - s) > 1:
        return 0j
    return poly.k_tilde_sums().get((p, q, r, s), 0j)


def is_generic(poly: MatricialPolynomial) -> bool:
    return any(v != 0 for v in poly.k_sums().values()) and any(v != 0 for v in poly.k_tilde_sums().values())


def jordan_pair_specialize(poly: MatricialPolynomial, x, y, z, t) -> tuple[complex, complex]:
    """Return ``(psi, psi_tilde)`` built from the K and K-tilde sums.

    ``psi = sum K_pq x^p y^q`` and ``psi_tilde = sum Kt_pqrs x^(p-r) y^(q-s) z^r t^s``.
    ``psi`` is the diagonal of the polynomial evaluated on the Jordan pair
    from :func:`jordan_pair_matrices`. ``psi_tilde`` coincides with the
    (1, 2) entry only when every word uses a single slot; see
    :func:`jordan_pair_offdiagonal` for the exact entry.
    """
    x, y, z, t = (complex(v) for v in (x, y, z, t))
    psi = sum(c * x**p * y**q for (p, q), c in poly.k_sums().items())
    psi_t = sum(c * x ** (p - r) * y ** (q - s) * z**r * t**s for (p, q, r, s), c in poly.k_tilde_sums().items())
    return complex(psi), complex(psi_t)


def jordan_pair_offdiagonal(poly: MatricialPolynomial, x, y, z, t) -> complex:
    """Exact (1, 2) entry of ``poly`` at the Jordan pair.

    With ``zeta = x I + z E12`` and ``xi = y I + t E12`` on the leading 2x2
    block, ``E12`` squares to zero, so the entry is the directional derivative
    ``sum K_pq (p x^(p-1) y^q z + q x^p y^(q-1) t)``.
    """
    x, y, z, t = (complex(v) for v in (x, y, z, t))
    out = 0j
    for (p, q), c in poly.k_sums().items():
        if p:
            out += c * p * x ** (p - 1) * y**q * z
        if q:
            out += c * q * x**p * y ** (q - 1) * t
    return out


def jordan_pair_matrices(x, y, z, t, d: int = 2) -> tuple[np.ndarray, np.ndarray]:
    if d < 2:
        raise ValueError("the Jordan pair needs d >= 2")
    zeta = np.eye(d, dtype=complex)
    xi = np.eye(d, dtype=complex)
    zeta[:2, :2] = [[x, z], [0, x]]
    xi[:2, :2] = [[y, t], [0, y]]
    return zeta, xi


# --- the delta sequence -------------------------------------------------------


def delta_seq(beta, gamma, n_max: int) -> list[np.ndarray]:
    """``[delta_0, ..., delta_{n_max}]`` from the left recurrence."""
    d = check_same_square(beta, gamma)
    beta = np.asarray(beta, dtype=complex)
    gamma = np.asarray(gamma, dtype=complex)
    out = [np.zeros((d, d), dtype=complex), np.eye(d, dtype=complex)]
    for n in range(1, n_max):
        out.append(beta @ out[n] + gamma @ out[n - 1])
    return out[: n_max + 1]


def delta_seq_right(beta, gamma, n_max: int) -> list[np.ndarray]:
    """Same sequence from ``delta_{n+1} = delta_n beta + delta_{n-1} gamma``."""
    d = check_same_square(beta, gamma)
    beta = np.asarray(beta, dtype=complex)
    gamma = np.asarray(gamma, dtype=complex)
    out = [np.zeros((d, d), dtype=complex), np.eye(d, dtype=complex)]
    for n in range(1, n_max):
        out.append(out[n] @ beta + out[n - 1] @ gamma)
    return out[: n_max + 1]


@lru_cache(maxsize=64)
def _delta_letter_words(n: int) -> tuple[str, ...]:
    if n == 0:
        return ()
    if n == 1:
        return ("",)
    return tuple("b" + w for w in _delta_letter_words(n - 1)) + tuple("g" + w for w in _delta_letter_words(n - 2))


def enumerate_delta_words(n: int) -> list[WordMonomial]:
    """The F_n distinct words whose sum is ``delta_n``."""
    if n < 0:
        raise ValueError("n must be >= 0")
    return [WordMonomial.from_letters(w) for w in _delta_letter_words(n)]


def delta_polynomial(n: int) -> MatricialPolynomial:
    return MatricialPolynomial.from_words(enumerate_delta_words(n))


def fibonacci(n: int) -> int:
    a, b = 0, 1
    for _ in range(n):
        a, b = b, a + b
    return a


def binet_scalar_delta(beta_s, gamma_s, n: int) -> complex:
    """Closed form of scalar ``delta_n`` via the roots of ``x^2 = beta x + gamma``."""
    beta_s, gamma_s = complex(beta_s), complex(gamma_s)
    disc = beta_s**2 + 4 * gamma_s
    scale = abs(beta_s) ** 2 + 4 * abs(gamma_s)
    if abs(disc) <= 8 * np.finfo(float).eps * scale or disc == 0:
        raise ValueError(f"repeated root: beta^2 + 4 gamma = {disc}")
    root = cmath.sqrt(disc)
    lam_p = (beta_s + root) / 2
    lam_m = (beta_s - root) / 2
    return (lam_p**n - lam_m**n) / root


# --- randomized genericity ------------------------------------------------------


@dataclass
class GenericityReport:
    trials: int
    failures: int
    failed_determinants: list[tuple[int, float]]
    threshold: float
    # (trial, check) for failures not tied to a delta_n: "gamma", "commutator"
    failed_checks: list[tuple[int, str]] = field(default_factory=list)
    d: int = 0
    n_max: int = 0
    seed: int | None = None

    def to_dict(self) -> dict:
        return {
            "trials": self.trials,
            "failures": self.failures,
            "failed_determinants": [[n, v] for n, v in self.failed_determinants],
            "failed_checks": [[i, name] for i, name in self.failed_checks],
            "threshold": self.threshold,
            "d": self.d,
            "n_max": self.n_max,
            "seed": self.seed,
        }


def complex_gaussian(rng: np.random.Generator, shape) -> np.ndarray:
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def sample_genericity(
    d: int,
    n_max: int,
    trials: int,
    seed: int,
    threshold: float = SV_THRESHOLD,
    beta=None,
    gamma=None,
) -> GenericityReport:
    """Draw Gaussian ``(beta, gamma)`` pairs and count degenerate draws.

    A trial fails when ``gamma`` or any ``delta_n`` with ``2 <= n <= n_max``
    (``delta_2 = beta`` covers beta) is numerically singular, or, for
    ``d >= 2``, when beta and gamma commute to within ``threshold``.
    ``beta`` / ``gamma`` pin that matrix for every trial.
    """
    if d < 1:
        raise ValueError("d must be >= 1")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = np.random.default_rng(seed)
    report = GenericityReport(trials, 0, [], threshold, d=d, n_max=n_max, seed=seed)
    for trial in range(trials):
        b = complex_gaussian(rng, (d, d)) if beta is None else np.asarray(beta, dtype=complex)
        g = complex_gaussian(rng, (d, d)) if gamma is None else np.asarray(gamma, dtype=complex)
        failed = False
        if sv_ratio(g) < threshold:
            report.failed_checks.append((trial, "gamma"))
            failed = True
        if d >= 2:
            comm = np.linalg.norm(b @ g - g @ b)
            if comm < threshold * np.linalg.norm(b) * np.linalg.norm(g) or comm == 0:
                report.failed_checks.append((trial, "commutator"))
                failed = True
        deltas = delta_seq(b, g, max(n_max, 2))
        for n in range(2, n_max + 1):
            if sv_ratio(deltas[n]) < threshold:
                report.failed_determinants.append((n, abs_det(deltas[n])))
                failed = True
        report.failures += failed
    return report
