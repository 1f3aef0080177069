import numpy as np
import pytest
from hypothesis import given, strategies as st

from boxeq.box import (
    StepFunction,
    apply_box_direct,
    apply_box_piecewise,
    box_on_fiber,
    box_support_bounds,
    count_discontinuities,
    discontinuity_budget,
    piecewise_stencil_range,
    recover_on_window,
)
from boxeq.errors import OutsideSampledRange, SingularMatrix
from boxeq.fibers import FiberFunction, Kernel, Mode, Window
from boxeq.generators import random_kernel, random_window
from boxeq.words import complex_gaussian

ONES = Kernel.from_dict(np.zeros((1, 1)), {-1: [[1.0]], 0: [[1.0]], 1: [[1.0]]})
W04 = Window(0.0, 1.0, 0.4)


def _ones_fiber(offset, window, N=1):
    ell = window.ell(offset)
    return FiberFunction(offset, -N - 2, np.ones((ell + 2 * N + 5, 1)))


def test_direct_examples():
    u = [_ones_fiber(0.1, W04)]
    assert apply_box_direct(u, ONES, W04, 0.5)[0] == pytest.approx(3)
    assert apply_box_direct(u, ONES, W04, 1.3)[0] == pytest.approx(1)


def test_zero_inside_window_gives_zero():
    u = FiberFunction(0.0, 0, np.zeros((3, 1)))
    for n in range(-3, 6):
        assert apply_box_direct(u, ONES, W04, W04.time(0.0, n))[0] == 0


def test_missing_sample_signalled():
    u = FiberFunction(0.0, 0, np.ones((1, 1)))
    with pytest.raises(OutsideSampledRange):
        apply_box_direct(u, ONES, W04, 0.0)


def test_piecewise_rows():
    N, ell = 2, 6
    assert piecewise_stencil_range(-3, ell, N) is None
    assert piecewise_stencil_range(-2, ell, N) == (2, 2)  # only c_N u(t + N eps)
    assert piecewise_stencil_range(3, ell, N) == (-2, 2)
    assert piecewise_stencil_range(ell + 2, ell, N) == (-2, -2)
    assert piecewise_stencil_range(ell + 3, ell, N) is None
    # short window: both ramps at once
    assert piecewise_stencil_range(0, 0, 2) == (0, 0)


def test_support_bounds():
    assert box_support_bounds(ONES, W04) == pytest.approx((-0.4, 1.4))
    k3 = Kernel.from_dict(np.zeros((1, 1)), {-3: [[1.0]], 3: [[1.0]]})
    assert box_support_bounds(k3, Window(0.0, 10.0, 1.0)) == (-3.0, 13.0)


def test_discontinuity_budget_values():
    assert discontinuity_budget(1, 0) == 6
    assert discontinuity_budget(1, 2) == 12
    assert discontinuity_budget(2, 1) == 15
    with pytest.raises(ValueError):
        discontinuity_budget(1, -1)


def _random_fiber(rng, window, off, N, d):
    ell = window.ell(off)
    lo = -N - 2
    return FiberFunction(off, lo, complex_gaussian(rng, (ell + 2 * N + 5, d)))


@given(seed=st.integers(0, 2**31), d=st.integers(1, 3), N=st.integers(1, 3), M=st.integers(1, 8))
def test_piecewise_equals_direct(seed, d, N, M):
    rng = np.random.default_rng(seed)
    kernel, window = random_kernel(rng, d, N), random_window(rng, M)
    off = float(rng.uniform(0, window.epsilon))
    u = _random_fiber(rng, window, off, N, d)
    for n in range(-N - 2, window.ell(off) + N + 3):
        t = window.time(off, n)
        a = apply_box_direct(u, kernel, window, t)
        b = apply_box_piecewise(u, kernel, window, t)
        assert np.abs(a - b).max() <= 1e-12 * max(1.0, np.abs(a).max())
        assert np.allclose(box_on_fiber(u, kernel, window, n, n).values[0], a, rtol=1e-12, atol=0)


@given(seed=st.integers(0, 2**31), d=st.integers(1, 3), N=st.integers(1, 3), M=st.integers(1, 8))
def test_linearity_and_support(seed, d, N, M):
    rng = np.random.default_rng(seed)
    kernel, window = random_kernel(rng, d, N), random_window(rng, M)
    u, v = (_random_fiber(rng, window, 0.0, N, d) for _ in range(2))
    a, b = complex_gaussian(rng, 2)
    w = FiberFunction(0.0, u.n_lo, a * u.values + b * v.values)
    lo, hi = -N - 2, window.ell(0.0) + N + 2
    bu, bv, bw = (box_on_fiber(x, kernel, window, lo, hi).values for x in (u, v, w))
    assert np.abs(bw - (a * bu + b * bv)).max() <= 1e-10 * max(1.0, np.abs(bw).max())
    # samples at -N-2, -N-1 and ell+N+1, ell+N+2 are outside the support
    assert np.all(bw[:2] == 0) and np.all(bw[-2:] == 0)


@given(seed=st.integers(0, 2**31), d=st.integers(1, 3), N=st.integers(1, 3), M=st.integers(1, 8),
       from_left=st.booleans())
def test_injectivity_by_forward_substitution(seed, d, N, M, from_left):
    rng = np.random.default_rng(seed)
    kernel, window = random_kernel(rng, d, N), random_window(rng, M)
    if not from_left:
        coeffs = kernel.coeffs.copy()
        coeffs[-1] = 0  # c_N = 0 forces the right-end substitution
        kernel = Kernel(kernel.alpha, coeffs)
    ell = window.ell(0.0)
    u = FiberFunction(0.0, 0, complex_gaussian(rng, (ell + 1, d)))
    rec = recover_on_window(box_on_fiber(u, kernel, window), kernel, window)
    assert np.abs(rec.values - u.values).max() <= 1e-9 * max(1.0, np.abs(u.values).max())


def test_recover_needs_an_invertible_end():
    k = Kernel.from_dict(np.zeros((2, 2)), {-1: np.diag([1.0, 0.0]), 1: np.diag([0.0, 1.0])})
    with pytest.raises(SingularMatrix):
        recover_on_window(FiberFunction(0.0, -1, np.ones((4, 2))), k, Window(0.0, 1.0, 1.0))


def test_step_function_limits():
    s = StepFunction((0.0, 1.0), np.array([[0.0], [1.0], [2.0]]))
    assert s(0.0)[0] == 1 and s(0.0, -1)[0] == 0 and s(0.0, 1)[0] == 1
    assert s(1.0, -1)[0] == 1 and s(5.0)[0] == 2
    with pytest.raises(ValueError):
        StepFunction((1.0, 0.0), np.zeros((3, 1)))


@pytest.mark.parametrize("N", [1, 2])
@pytest.mark.parametrize("p", [0, 1, 2, 3])
def test_discontinuity_budget_respected(N, p):
    rng = np.random.default_rng(100 * N + p)
    for _ in range(20):
        kernel = random_kernel(rng, 2, N, Mode.RANGE)
        window = Window(0.0, float(rng.uniform(2.0, 6.0)), float(rng.uniform(0.3, 1.0)))
        jumps = tuple(sorted(rng.uniform(-1.0, 7.0, size=p)))
        u = StepFunction(jumps, complex_gaussian(rng, (p + 1, 2)))
        assert count_discontinuities(u, kernel, window) <= discontinuity_budget(kernel, p)


def test_constant_u_jumps_at_window_ends():
    u = StepFunction((), np.ones((1, 1)))
    # u = 1 everywhere: box u jumps where each shifted indicator switches
    assert count_discontinuities(u, ONES, Window(0.0, 1.0, 0.4)) == 6
