import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from boxeq.errors import OutsideSampledRange, ProblemError
from boxeq.fibers import (
    FiberFunction,
    Kernel,
    Mode,
    ProblemSpec,
    Window,
    chi,
    ell,
    fiber_of,
    parse_problem,
    problem_to_dict,
    serialize_problem,
)
from boxeq.generators import RandomProblemConfig, random_problem

W = Window(0.0, 2.5, 1.0)


def test_chi_closed_interval():
    assert chi(W.t0, W) == 1
    assert chi(W.tf, W) == 1
    assert chi(W.tf + 0.5, W) == 0
    assert chi((W.t0 + W.tf) / 2, W) == 1
    assert chi(W.t0 - 1e-9, W) == 0


def test_fiber_of_examples():
    c = fiber_of(W.t0, W)
    assert (c.offset, c.index) == (0.0, 0)
    c = fiber_of(2.5, W)
    assert (c.offset, c.index) == (0.5, 2)
    c = fiber_of(-0.5, W)
    assert (c.offset, c.index) == (0.5, -1)


def test_ell_examples():
    assert ell(0.0, W) == 2 == W.M
    assert ell(0.7, W) == 1 == W.M - 1
    # tau = tf - M eps exactly: the max-definition gives M
    assert ell(0.5, W) == 2


def test_ell_exact_multiple_with_rounding():
    w = Window(0.0, 0.3, 0.1)  # 0.3 / 0.1 = 2.9999999999999996 in floating point
    assert w.M == 3
    assert ell(0.0, w) == 3


@pytest.mark.parametrize("t0,tf,eps", [(0.0, 0.5, 1.0), (1.0, 1.0, 0.1), (0.0, 1.0, 0.0), (0.0, 1.0, -1.0)])
def test_degenerate_windows_rejected(t0, tf, eps):
    with pytest.raises(ProblemError):
        Window(t0, tf, eps)


@given(
    t0=st.floats(-100, 100),
    span=st.floats(1.0, 50.0),
    eps=st.floats(0.01, 1.0),
    x=st.floats(-60, 160),
)
def test_fiber_round_trip(t0, span, eps, x):
    w = Window(t0, t0 + span * eps, eps)
    t = t0 + x * eps
    c = fiber_of(t, w)
    assert 0.0 <= c.offset < eps
    back = c.time(w)
    scale = max(abs(t), abs(t0), eps)
    assert abs(back - t) <= 4 * np.spacing(scale) + 4 * np.spacing(abs(c.index * eps))


@given(span=st.floats(1.0, 30.0), eps=st.floats(0.05, 2.0), a=st.floats(0, 1), b=st.floats(0, 1))
def test_ell_monotone_and_two_valued(span, eps, a, b):
    w = Window(0.0, span * eps, eps)
    lo, hi = sorted((a * eps * 0.999999, b * eps * 0.999999))
    la, lb = ell(lo, w), ell(hi, w)
    assert la >= lb
    assert {la, lb} <= {w.M - 1, w.M}


def test_fiber_function_lookup_signal():
    f = FiberFunction(0.0, -1, np.ones((3, 2)))
    assert f.n_hi == 1 and f.d == 2
    assert np.all(f[0] == 1)
    with pytest.raises(OutsideSampledRange):
        f[2]
    assert f.get(5) is None
    with pytest.raises(ValueError):
        FiberFunction.from_mapping(0.0, {0: [1.0], 2: [1.0]})


def test_kernel_tightness():
    with pytest.raises(ProblemError, match="N not tight"):
        Kernel.from_dict(np.eye(1), {-1: [[0.0]], 0: [[1.0]], 1: [[0.0]]})
    k = Kernel.from_dict(np.eye(1), {-2: [[1.0]], 0: [[1.0]]})
    assert k.N == 2 and np.all(k.c(1) == 0) and np.all(k.c(5) == 0)


def _minimal_doc():
    return {
        "d": 1, "N": 1, "epsilon": 1.0, "t0": 0.0, "tf": 2.0,
        "alpha": [[1.0]], "c": {"-1": [[1.0]], "0": [[1.0]], "1": [[[1.0, 0.0]]]},
        "mode": "solve",
        "fibers": [{"offset": 0.0, "f": {str(n): [1.0] for n in range(-1, 4)}}],
    }


def test_parse_minimal():
    p = parse_problem(json.dumps(_minimal_doc()))
    assert p.window.M == 2 and p.N == 1 and p.d == 1 and p.mode is Mode.SOLVE


def test_parse_errors_name_the_field():
    doc = _minimal_doc()
    doc["c"] = {"-1": [[0.0]], "0": [[1.0]], "1": [[0.0]]}
    with pytest.raises(ProblemError, match="N not tight"):
        parse_problem(json.dumps(doc))

    doc = _minimal_doc()
    del doc["fibers"][0]["f"]["-1"]
    with pytest.raises(ProblemError, match="fiber coverage") as exc:
        parse_problem(json.dumps(doc))
    assert exc.value.path == "fibers/0/f"

    doc = _minimal_doc()
    doc["alpha"] = [[0.0]]
    with pytest.raises(ProblemError, match="alpha not invertible"):
        parse_problem(json.dumps(doc))

    doc = _minimal_doc()
    doc["alpha"] = [[1.0, 2.0, 3.0]]
    with pytest.raises(ProblemError) as exc:
        parse_problem(json.dumps(doc))
    assert exc.value.path.startswith("alpha")

    doc = _minimal_doc()
    doc["mode"] = "range"
    doc["alpha"] = [[0.0]]
    with pytest.raises(ProblemError, match="outputs"):
        parse_problem(json.dumps(doc))

    with pytest.raises(ProblemError, match="invalid JSON"):
        parse_problem("{not json")
    with pytest.raises(ProblemError, match="schema"):
        parse_problem(json.dumps({"d": 1}))


def test_range_mode_needs_zero_alpha():
    k = Kernel.from_dict(np.eye(1), {-1: [[1.0]], 0: [[1.0]], 1: [[1.0]]})
    with pytest.raises(ProblemError, match="alpha = 0"):
        ProblemSpec(k, W, (FiberFunction(0.0, 0, np.ones((3, 1))),), Mode.RANGE)


@given(seed=st.integers(0, 2**31), d=st.integers(1, 3), N=st.integers(1, 3), M=st.integers(1, 6),
       mode=st.sampled_from(list(Mode)))
def test_serialize_round_trip(seed, d, N, M, mode):
    p = random_problem(np.random.default_rng(seed), RandomProblemConfig(d=d, N=N, M=M, mode=mode))
    q = parse_problem(serialize_problem(p))
    assert q == p
    assert problem_to_dict(q) == problem_to_dict(p)
    assert all(math.isfinite(f.offset) for f in q.rhs)
