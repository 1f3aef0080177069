"""The thirteen acceptance criteria, each at its stated tolerance and time budget.

Every test records one PASS/FAIL line, printed in the terminal summary.
"""

import time

import numpy as np
import pytest

from boxeq.box import (
    StepFunction,
    apply_box_direct,
    apply_box_piecewise,
    box_on_fiber,
    count_discontinuities,
    discontinuity_budget,
    recover_on_window,
)
from boxeq.errors import SingularSystem
from boxeq.fibers import FiberFunction, Mode, Window
from boxeq.generators import (
    RandomProblemConfig,
    random_kernel,
    random_problem,
    random_window,
    range_round_trip,
    root_of_unity_instance,
)
from boxeq.oracle import solve_dense
from boxeq.recurrence import companion_lift
from boxeq.solver import eliminate_phi_coefficient, solve, theta_matrix
from boxeq.words import (
    binet_scalar_delta,
    complex_gaussian,
    delta_polynomial,
    delta_seq,
    delta_seq_right,
    enumerate_delta_words,
    fibonacci,
    sample_genericity,
)
from conftest import rel_err


@pytest.fixture
def criterion(request):
    lines = request.config.__dict__.setdefault("_acceptance_lines", [])

    class Recorder:
        def run(self, number, title, budget, body):
            start = time.perf_counter()
            status, note = "FAIL", ""
            try:
                note = body() or ""
                elapsed = time.perf_counter() - start
                if elapsed >= budget:
                    note = f"runtime {elapsed:.2f}s exceeds {budget}s"
                    raise AssertionError(note)
                status = "PASS"
            except Exception as exc:  # noqa: BLE001 - the line is recorded, then the test fails
                note = note or f"{type(exc).__name__}: {exc}"
                raise
            finally:
                elapsed = time.perf_counter() - start
                lines.append((number, f"[{status}] {number:2d}. {title} ({elapsed:.2f}s / {budget}s) {note}".rstrip()))

    return Recorder()


def _agree(us, vs):
    return max(rel_err(a.values, b.values) for a, b in zip(us, vs))


def test_01_word_count(criterion):
    def body():
        for n in range(21):
            assert len(enumerate_delta_words(n)) == fibonacci(n)
        return "F_n words for n <= 20"

    criterion.run(1, "word-count law", 1.0, body)


def test_02_delta_consistency(criterion):
    def body():
        rng = np.random.default_rng(2)
        worst = 0.0
        for trial in range(100):
            d = 1 + trial % 3
            b, g = complex_gaussian(rng, (d, d)), complex_gaussian(rng, (d, d))
            left, right = delta_seq(b, g, 12), delta_seq_right(b, g, 12)
            for n in range(13):
                words = delta_polynomial(n)(b, g)
                worst = max(worst, rel_err(right[n], left[n]), rel_err(words, left[n]), rel_err(words, right[n]))
        assert worst <= 1e-9, worst
        return f"max rel {worst:.1e}"

    criterion.run(2, "delta consistency", 5.0, body)


def test_03_binet(criterion):
    def body():
        rng = np.random.default_rng(3)
        worst, count = 0.0, 0
        while count < 100:
            b, g = complex_gaussian(rng, 2)
            if abs(b * b + 4 * g) <= 1e-6:
                continue
            count += 1
            seq = delta_seq([[b]], [[g]], 20)
            for n in range(21):
                ref = seq[n][0, 0]
                worst = max(worst, abs(binet_scalar_delta(b, g, n) - ref) / max(1.0, abs(ref)))
        assert worst <= 1e-10, worst
        return f"max rel {worst:.1e}"

    criterion.run(3, "Binet closed form", 1.0, body)


def test_04_companion_power(criterion):
    def body():
        rng = np.random.default_rng(4)
        worst = 0.0
        for trial in range(100):
            d = 1 + trial % 3
            b, g = complex_gaussian(rng, (d, d)), complex_gaussian(rng, (d, d))
            lift = companion_lift(b, g)
            dl = delta_seq(b, g, 13)
            P = np.eye(2 * d, dtype=complex)
            for n in range(1, 13):
                P = lift @ P
                expect = np.block([[dl[n + 1], dl[n] @ g], [dl[n], dl[n - 1] @ g]])
                worst = max(worst, rel_err(P, expect))
        assert worst <= 1e-9, worst
        return f"max rel {worst:.1e}"

    criterion.run(4, "companion-power identity", 2.0, body)


def test_05_box_equivalence(criterion):
    def body():
        rng = np.random.default_rng(5)
        worst = 0.0
        for trial in range(100):
            d, N, M = 1 + trial % 3, 1 + (trial // 3) % 3, 1 + trial % 8
            kernel, window = random_kernel(rng, d, N), random_window(rng, M)
            for off in (0.0, float(rng.uniform(0, window.epsilon))):
                ell = window.ell(off)
                u = FiberFunction(off, -N - 1, complex_gaussian(rng, (ell + 2 * N + 3, d)))
                for n in range(-N - 1, ell + N + 2):
                    t = window.time(off, n)
                    a = apply_box_direct(u, kernel, window, t)
                    b = apply_box_piecewise(u, kernel, window, t)
                    worst = max(worst, float(np.abs(a - b).max() / max(1.0, np.abs(a).max())))
        assert worst <= 1e-12, worst
        return f"max rel {worst:.1e}"

    criterion.run(5, "box piecewise == direct", 5.0, body)


def test_06_support_and_kernel(criterion):
    def body():
        rng = np.random.default_rng(6)
        worst_inj = 0.0
        for trial in range(60):
            d, N, M = 1 + trial % 3, 1 + trial % 3, 1 + trial % 8
            kernel, window = random_kernel(rng, d, N), random_window(rng, M)
            ell = window.ell(0.0)
            u = FiberFunction(0.0, -N - 3, complex_gaussian(rng, (ell + 2 * N + 7, d)))
            lo, hi = -2 * N - 3, ell + 2 * N + 3
            bu = box_on_fiber(u.restrict(0, ell), kernel, window, lo, hi)
            outside = [n for n in bu.indices() if n < -N or n > ell + N]
            assert all(np.all(bu[n] == 0) for n in outside)
            for n in range(-N - 1, ell + N + 2):
                t = window.time(0.0, n)
                if n < -N or n > ell + N:
                    assert np.all(apply_box_direct(u, kernel, window, t) == 0)
            vals = u.values.copy()
            vals[N + 3 : N + 3 + ell + 1] = 0  # u vanishes on [t0, tf], arbitrary outside
            z = FiberFunction(0.0, u.n_lo, vals)
            for n in range(-N, ell + N + 1):
                assert np.all(apply_box_direct(z, kernel, window, window.time(0.0, n)) == 0)
            w0 = u.restrict(0, ell)
            rec = recover_on_window(box_on_fiber(w0, kernel, window), kernel, window)
            worst_inj = max(worst_inj, rel_err(rec.values, w0.values))
        assert worst_inj <= 1e-9, worst_inj
        return f"injectivity max rel {worst_inj:.1e}"

    criterion.run(6, "support & kernel", 2.0, body)


def test_07_discontinuity_budget(criterion):
    def body():
        rng = np.random.default_rng(7)
        worst = 0
        for N in (1, 2):
            for p in (0, 1, 2, 3):
                for _ in range(10):
                    kernel = random_kernel(rng, 2, N, Mode.RANGE)
                    window = Window(0.0, float(rng.uniform(2.0, 6.0)), float(rng.uniform(0.3, 1.0)))
                    jumps = tuple(sorted(rng.uniform(-1.0, 7.0, size=p)))
                    u = StepFunction(jumps, complex_gaussian(rng, (p + 1, 2)))
                    count = count_discontinuities(u, kernel, window)
                    assert count <= discontinuity_budget(kernel, p), (N, p, count)
                    worst = max(worst, count - discontinuity_budget(kernel, p))
        return f"max (count - budget) = {worst}"

    criterion.run(7, "discontinuity budget", 2.0, body)


SUITES = [(N, d) for N in (1, 2, 3) for d in (1, 2)]


def _suite_problem(N, d, seed):
    cfg = RandomProblemConfig(d=d, N=N, M=1 + seed % 8, mode=Mode.SOLVE)
    return random_problem(np.random.default_rng(10_000 * N + 1000 * d + seed), cfg)


def test_08_solver_residual(criterion):
    def body():
        worst = 0.0
        for N, d in SUITES:
            for seed in range(100):
                r = solve(_suite_problem(N, d, seed))
                worst = max(worst, r.residual_rel)
        assert worst <= 1e-8, worst
        return f"max residual/(1+max|f|) {worst:.1e} over 600 problems"

    criterion.run(8, "solver residual", 30.0, body)


def test_09_oracle_agreement(criterion):
    def body():
        worst = 0.0
        for N, d in SUITES:
            for seed in range(100):
                p = _suite_problem(N, d, seed)
                worst = max(worst, _agree(solve(p).u, solve_dense(p).u))
        assert worst <= 1e-8, worst
        return f"max rel {worst:.1e} over 600 problems"

    criterion.run(9, "oracle agreement", 60.0, body)


def test_10_n1_path_coherence(criterion):
    def body():
        rng = np.random.default_rng(10)
        worst = 0.0
        for mode in Mode:
            for trial in range(50):
                p = random_problem(rng, RandomProblemConfig(d=1 + trial % 2, N=1, M=1 + trial % 8, mode=mode))
                a, b = solve(p, "closed"), solve(p, "general")
                worst = max(worst, _agree(a.u, b.u))
                if mode is Mode.RANGE:
                    worst = max(worst, _agree(a.f_extended, b.f_extended))
        assert worst <= 1e-9, worst
        return f"max rel {worst:.1e}"

    criterion.run(10, "N=1 path coherence", 10.0, body)


def test_11_range_round_trip(criterion):
    def body():
        rng = np.random.default_rng(11)
        worst = 0.0
        for N in (1, 2):
            for trial in range(40):
                rt = range_round_trip(rng, 1 + trial % 2, N, 1 + trial % 8)
                r = solve(rt.problem)
                worst = max(worst, _agree(r.u, rt.u0), _agree(r.f_extended, rt.box_u0))
        assert worst <= 1e-9, worst
        return f"max rel {worst:.1e}"

    criterion.run(11, "range round-trip", 10.0, body)


def test_12_theta_identity(criterion):
    def body():
        rng = np.random.default_rng(12)
        worst = 0.0
        for trial in range(50):
            kernel = random_kernel(rng, 1 + trial % 3, 1)
            ell = trial % 9
            a, b = theta_matrix(kernel, ell), eliminate_phi_coefficient(kernel, ell)
            worst = max(worst, float(np.abs(a - b).max() / max(1.0, np.abs(b).max())))
        assert worst <= 1e-10, worst
        return f"max rel {worst:.1e}"

    criterion.run(12, "theta identity", 2.0, body)


def test_13_genericity(criterion):
    def body():
        rep = sample_genericity(2, 10, 1000, seed=13)
        assert rep.failures == 0, rep.to_dict()
        flagged = 0
        for mode in Mode:
            p = root_of_unity_instance(mode)
            for run in (lambda q: solve(q, "closed"), lambda q: solve(q, "general"), solve_dense):
                with pytest.raises(SingularSystem):
                    run(p)
                flagged += 1
        return f"0/1000 sampler failures; root-of-unity instance flagged {flagged}/6"

    criterion.run(13, "genericity sampling", 10.0, body)
