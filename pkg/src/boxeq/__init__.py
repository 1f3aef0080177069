"""Solvers for the matrix delay-difference equation

    alpha u(t) + sum_{|k| <= N} c_k u(t + k eps) chi(t + k eps) = f(t)

with ``chi`` the indicator of a window ``[t0, tf]``.
"""

from .box import apply_box_direct, apply_box_piecewise, box_on_fiber, box_support_bounds, discontinuity_budget
from .errors import BoxEqError, MissingSample, OutsideSampledRange, ProblemError, SingularMatrix, SingularSystem
from .fibers import (
    FiberCoordinate,
    FiberFunction,
    Kernel,
    Mode,
    ProblemSpec,
    Window,
    chi,
    ell,
    fiber_of,
    parse_problem,
    serialize_problem,
)
from .oracle import assemble_dense, solve_dense
from .recurrence import LeftProductChain, companion_lift, solve_nonstationary, solve_second_order, solve_stationary
from .report import SolveReport
from .solver import (
    build_block_companion,
    propagate,
    solve,
    solve_general,
    solve_n1,
    solve_range_general,
    solve_range_n1,
)
from .words import (
    GenericityReport,
    MatricialPolynomial,
    WordMonomial,
    binet_scalar_delta,
    delta_seq,
    delta_seq_right,
    enumerate_delta_words,
    eval_word,
    is_generic,
    k_sum,
    k_tilde_sum,
    sample_genericity,
)

__all__ = [name for name in dir() if not name.startswith("_")]
