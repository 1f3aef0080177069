"""Exact time bookkeeping, sampled fibers and problem-file ingestion.

The equation only couples values of ``u`` on one arithmetic progression
``t0 + offset + n*epsilon`` at a time. Every real time is therefore reduced
once to a pair ``(offset, n)`` and the solvers work with integer indices.
On a fiber the window ``[t0, tf]`` is exactly the index range ``0..ell``.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import jsonschema
import numpy as np

from ._linalg import SV_THRESHOLD, frozen, sv_ratio
from .errors import OutsideSampledRange, ProblemError


class Mode(str, enum.Enum):
    SOLVE = "solve"  # alpha invertible, solve for u
    RANGE = "range"  # alpha == 0, characterise the range of the box operator


@dataclass(frozen=True)
class Window:
    t0: float
    tf: float
    epsilon: float

    def __post_init__(self):
        if not (self.epsilon > 0 and math.isfinite(self.epsilon)):
            raise ProblemError(f"epsilon must be > 0, got {self.epsilon}", "epsilon")
        if not self.tf > self.t0:
            raise ProblemError(f"need tf > t0, got t0={self.t0}, tf={self.tf}", "tf")
        if self.M < 1:
            raise ProblemError(
                f"degenerate window: tf - t0 = {self.tf - self.t0} < epsilon = {self.epsilon}", "tf"
            )

    @property
    def time_tol(self) -> float:
        # Absolute slack for time comparisons: a few ulps at the window's scale.
        return 16.0 * float(np.spacing(max(abs(self.t0), abs(self.tf), self.epsilon)))

    def _snap_floor(self, span: float) -> int:
        """floor(span / epsilon), rounding up when within ``time_tol`` of the next integer."""
        q = span / self.epsilon
        n = math.floor(q)
        if (n + 1 - q) * self.epsilon <= self.time_tol:
            n += 1
        return n

    @property
    def M(self) -> int:
        return self._snap_floor(self.tf - self.t0)

    def ell(self, offset: float) -> int:
        return ell(offset, self)

    def time(self, offset: float, n: int) -> float:
        return self.t0 + offset + n * self.epsilon


@dataclass(frozen=True)
class FiberCoordinate:
    """Absolute time ``t0 + offset + index*epsilon`` with ``0 <= offset < epsilon``."""

    offset: float
    index: int

    @classmethod
    def reduce(cls, offset: float, index: int, epsilon: float, tol: float = 0.0) -> "FiberCoordinate":
        shift = math.floor(offset / epsilon)
        offset = offset - shift * epsilon
        index = int(index) + shift
        if offset >= epsilon - tol:
            offset, index = 0.0, index + 1
        elif offset < tol:
            offset = 0.0
        return cls(float(offset), index)

    def time(self, window: Window) -> float:
        return window.time(self.offset, self.index)


def chi(t: float, window: Window) -> int:
    """Indicator of the closed window ``[t0, tf]`` (up to ``window.time_tol``)."""
    tol = window.time_tol
    return int(window.t0 - tol <= t <= window.tf + tol)


def fiber_of(t: float, window: Window) -> FiberCoordinate:
    return FiberCoordinate.reduce(t - window.t0, 0, window.epsilon, window.time_tol)


def ell(offset: float, window: Window) -> int:
    """Largest n with ``t0 + offset + n*epsilon <= tf``; always M or M-1."""
    return window._snap_floor(window.tf - window.t0 - offset)


@dataclass(frozen=True)
class Kernel:
    """Stencil ``c_{-N}..c_N`` plus ``alpha``; ``coeffs[k + N]`` is ``c_k``."""

    alpha: np.ndarray
    coeffs: np.ndarray  # shape (2N+1, d, d)

    def __post_init__(self):
        alpha = frozen(self.alpha)
        coeffs = frozen(self.coeffs)
        if alpha.ndim != 2 or alpha.shape[0] != alpha.shape[1]:
            raise ProblemError(f"alpha must be square, got {alpha.shape}", "alpha")
        d = alpha.shape[0]
        if coeffs.ndim != 3 or coeffs.shape[1:] != (d, d) or coeffs.shape[0] % 2 != 1 or coeffs.shape[0] < 3:
            raise ProblemError(f"coeffs must have shape (2N+1, {d}, {d}), got {coeffs.shape}", "c")
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "coeffs", coeffs)
        if not (np.any(self.c(self.N)) or np.any(self.c(-self.N))):
            raise ProblemError(f"N not tight: c_{self.N} and c_{-self.N} are both zero", "N")

    @classmethod
    def from_dict(cls, alpha, c: Mapping[int, np.ndarray], N: int | None = None) -> "Kernel":
        alpha = np.asarray(alpha, dtype=complex)
        d = alpha.shape[0]
        if N is None:
            N = max(abs(k) for k in c)
        coeffs = np.zeros((2 * N + 1, d, d), dtype=complex)
        for k, m in c.items():
            if abs(k) > N:
                raise ProblemError(f"coefficient index {k} exceeds N={N}", f"c/{k}")
            coeffs[k + N] = m
        return cls(alpha, coeffs)

    @property
    def d(self) -> int:
        return self.alpha.shape[0]

    @property
    def N(self) -> int:
        return (self.coeffs.shape[0] - 1) // 2

    def __eq__(self, other):
        if not isinstance(other, Kernel):
            return NotImplemented
        return np.array_equal(self.alpha, other.alpha) and np.array_equal(self.coeffs, other.coeffs)

    __hash__ = None

    def c(self, k: int) -> np.ndarray:
        if abs(k) > self.N:
            return np.zeros((self.d, self.d), dtype=complex)
        return self.coeffs[k + self.N]


@dataclass(frozen=True)
class FiberFunction:
    """Samples of a C^d-valued function on ``t0 + offset + n*epsilon``, ``n_lo <= n <= n_hi``."""

    offset: float
    n_lo: int
    values: np.ndarray  # shape (count, d)

    def __post_init__(self):
        v = frozen(self.values)
        if v.ndim != 2:
            raise ValueError(f"values must be 2-d (count, d), got {v.shape}")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "n_lo", int(self.n_lo))

    @classmethod
    def from_mapping(cls, offset: float, samples: Mapping[int, Sequence]) -> "FiberFunction":
        idx = sorted(samples)
        if not idx:
            raise ValueError("empty fiber")
        if idx != list(range(idx[0], idx[-1] + 1)):
            raise ValueError("fiber indices are not contiguous")
        return cls(offset, idx[0], np.array([np.asarray(samples[n], dtype=complex) for n in idx]))

    @classmethod
    def zeros(cls, offset: float, n_lo: int, n_hi: int, d: int) -> "FiberFunction":
        return cls(offset, n_lo, np.zeros((n_hi - n_lo + 1, d), dtype=complex))

    def __eq__(self, other):
        if not isinstance(other, FiberFunction):
            return NotImplemented
        return self.offset == other.offset and self.n_lo == other.n_lo and np.array_equal(self.values, other.values)

    __hash__ = None

    @property
    def n_hi(self) -> int:
        return self.n_lo + self.values.shape[0] - 1

    @property
    def d(self) -> int:
        return self.values.shape[1]

    def indices(self) -> range:
        return range(self.n_lo, self.n_hi + 1)

    def covers(self, lo: int, hi: int) -> bool:
        return self.n_lo <= lo and hi <= self.n_hi

    def __contains__(self, n: int) -> bool:
        return self.n_lo <= n <= self.n_hi

    def __getitem__(self, n: int) -> np.ndarray:
        if not (self.n_lo <= n <= self.n_hi):
            raise OutsideSampledRange(n, self.n_lo, self.n_hi, self.offset)
        return self.values[n - self.n_lo]

    def get(self, n: int, default=None):
        return self.values[n - self.n_lo] if n in self else default

    def items(self):
        for n in self.indices():
            yield n, self.values[n - self.n_lo]

    def restrict(self, lo: int, hi: int) -> "FiberFunction":
        lo, hi = max(lo, self.n_lo), min(hi, self.n_hi)
        return FiberFunction(self.offset, lo, self.values[lo - self.n_lo : hi - self.n_lo + 1])


@dataclass(frozen=True)
class ProblemSpec:
    kernel: Kernel
    window: Window
    rhs: tuple[FiberFunction, ...]
    mode: Mode = Mode.SOLVE
    sv_threshold: float = field(default=SV_THRESHOLD, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "rhs", tuple(self.rhs))
        object.__setattr__(self, "mode", Mode(self.mode))
        validate_problem(self)

    @property
    def d(self) -> int:
        return self.kernel.d

    @property
    def N(self) -> int:
        return self.kernel.N


def find_fiber(fibers: Iterable[FiberFunction], offset: float, window: Window) -> FiberFunction:
    tol = window.time_tol
    for fib in fibers:
        gap = abs(fib.offset - offset)
        if gap <= tol or abs(gap - window.epsilon) <= tol:
            return fib
    raise OutsideSampledRange(0, 0, -1, offset)


def validate_problem(p: ProblemSpec) -> None:
    k, w = p.kernel, p.window
    N = k.N
    if p.mode is Mode.SOLVE:
        if sv_ratio(k.alpha) < p.sv_threshold:
            raise ProblemError("alpha not invertible (mode 'solve' requires invertible alpha)", "alpha")
    elif np.any(k.alpha):
        raise ProblemError("mode 'range' requires alpha = 0 exactly", "alpha")
    if not p.rhs:
        raise ProblemError("at least one fiber is required", "fibers")
    seen: list[float] = []
    for i, fib in enumerate(p.rhs):
        path = f"fibers/{i}"
        if not (0.0 <= fib.offset < w.epsilon):
            raise ProblemError(f"offset {fib.offset} not in [0, epsilon)", f"{path}/offset")
        if any(abs(fib.offset - o) <= w.time_tol for o in seen):
            raise ProblemError(f"duplicate fiber offset {fib.offset}", f"{path}/offset")
        seen.append(fib.offset)
        if fib.d != k.d:
            raise ProblemError(f"sample vectors have length {fib.d}, expected d={k.d}", f"{path}/f")
        ell_ = w.ell(fib.offset)
        if p.mode is Mode.SOLVE:
            if not fib.covers(-N, ell_ + N):
                raise ProblemError(
                    f"fiber coverage: samples span [{fib.n_lo}, {fib.n_hi}], need [{-N}, {ell_ + N}]", f"{path}/f"
                )
        else:
            if fib.n_lo < 0 or fib.n_hi > ell_:
                raise ProblemError(
                    f"range mode: samples outside [t0, tf] are outputs, got span [{fib.n_lo}, {fib.n_hi}] "
                    f"for window indices [0, {ell_}]",
                    f"{path}/f",
                )
            if not fib.covers(0, ell_):
                raise ProblemError(
                    f"fiber coverage: samples span [{fib.n_lo}, {fib.n_hi}], need [0, {ell_}]", f"{path}/f"
                )


# --- JSON problem files ------------------------------------------------------

_COMPLEX = {
    "oneOf": [
        {"type": "number"},
        {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
    ]
}
_VECTOR = {"type": "array", "items": _COMPLEX, "minItems": 1}
_MATRIX = {"type": "array", "items": _VECTOR, "minItems": 1}

PROBLEM_SCHEMA = {
    "type": "object",
    "required": ["d", "N", "epsilon", "t0", "tf", "alpha", "c", "mode", "fibers"],
    "properties": {
        "d": {"type": "integer", "minimum": 1},
        "N": {"type": "integer", "minimum": 1},
        "epsilon": {"type": "number", "exclusiveMinimum": 0},
        "t0": {"type": "number"},
        "tf": {"type": "number"},
        "alpha": _MATRIX,
        "c": {"type": "object", "patternProperties": {"^-?[0-9]+$": _MATRIX}, "additionalProperties": False},
        "mode": {"enum": ["solve", "range"]},
        "fibers": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "required": ["offset", "f"],
                "properties": {
                    "offset": {"type": "number"},
                    "f": {"type": "object", "patternProperties": {"^-?[0-9]+$": _VECTOR}, "additionalProperties": False},
                },
            },
        },
    },
}


def _cplx(x) -> complex:
    return complex(x) if isinstance(x, (int, float)) else complex(x[0], x[1])


def _matrix(raw, d: int, path: str) -> np.ndarray:
    m = np.array([[_cplx(x) for x in row] for row in raw], dtype=complex) if raw else np.zeros((0, 0))
    if m.shape != (d, d) or any(len(row) != d for row in raw):
        raise ProblemError(f"expected a {d}x{d} matrix", path)
    return m


def _vector(raw, d: int, path: str) -> np.ndarray:
    if len(raw) != d:
        raise ProblemError(f"expected a vector of length {d}, got {len(raw)}", path)
    return np.array([_cplx(x) for x in raw], dtype=complex)


def encode_complex(z) -> list[float]:
    z = complex(z)
    return [z.real, z.imag]


def encode_vector(v) -> list[list[float]]:
    return [encode_complex(z) for z in np.asarray(v).ravel()]


def encode_matrix(m) -> list[list[list[float]]]:
    return [encode_vector(row) for row in np.asarray(m)]


def encode_fiber(fib: FiberFunction, key: str = "f") -> dict:
    return {"offset": fib.offset, key: {str(n): encode_vector(v) for n, v in fib.items()}}


def decode_fiber(raw: dict, d: int, path: str, key: str = "f") -> FiberFunction:
    samples = {}
    for sn, vec in raw[key].items():
        samples[int(sn)] = _vector(vec, d, f"{path}/{key}/{sn}")
    if not samples:
        raise ProblemError("fiber has no samples", f"{path}/{key}")
    try:
        return FiberFunction.from_mapping(float(raw["offset"]), samples)
    except ValueError as exc:
        raise ProblemError(str(exc), f"{path}/{key}") from None


def _schema_check(doc, schema) -> None:
    try:
        jsonschema.validate(doc, schema)
    except jsonschema.ValidationError as exc:
        path = "/".join(str(p) for p in exc.absolute_path)
        raise ProblemError(f"schema violation: {exc.message}", path) from None


def load_json(text: str | bytes):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ProblemError(f"invalid JSON: {exc}") from None


def decode_kernel(doc: dict, require_alpha: bool = True) -> tuple[Kernel, Window]:
    d, N = int(doc["d"]), int(doc["N"])
    raw_alpha = doc.get("alpha")
    alpha = _matrix(raw_alpha, d, "alpha") if raw_alpha is not None else np.zeros((d, d), complex)
    c = {}
    for sk, mat in doc["c"].items():
        k = int(sk)
        if abs(k) > N:
            raise ProblemError(f"coefficient index {k} exceeds N={N}", f"c/{sk}")
        c[k] = _matrix(mat, d, f"c/{sk}")
    kernel = Kernel.from_dict(alpha, c, N)
    window = Window(float(doc["t0"]), float(doc["tf"]), float(doc["epsilon"]))
    return kernel, window


def parse_problem(text: str | bytes, sv_threshold: float = SV_THRESHOLD) -> ProblemSpec:
    doc = load_json(text)
    _schema_check(doc, PROBLEM_SCHEMA)
    kernel, window = decode_kernel(doc)
    fibers = [decode_fiber(raw, kernel.d, f"fibers/{i}") for i, raw in enumerate(doc["fibers"])]
    return ProblemSpec(kernel, window, tuple(fibers), Mode(doc["mode"]), sv_threshold)


def kernel_to_dict(kernel: Kernel, window: Window) -> dict:
    N = kernel.N
    return {
        "d": kernel.d,
        "N": N,
        "epsilon": window.epsilon,
        "t0": window.t0,
        "tf": window.tf,
        "alpha": encode_matrix(kernel.alpha),
        "c": {str(k): encode_matrix(kernel.c(k)) for k in range(-N, N + 1)},
    }


def problem_to_dict(problem: ProblemSpec) -> dict:
    doc = kernel_to_dict(problem.kernel, problem.window)
    doc["mode"] = problem.mode.value
    doc["fibers"] = [encode_fiber(fib) for fib in problem.rhs]
    return doc


def serialize_problem(problem: ProblemSpec) -> str:
    return json.dumps(problem_to_dict(problem), indent=1)
