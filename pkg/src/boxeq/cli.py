"""``boxeq`` command line: solve, box, oracle, delta, genericity.

Every command writes JSON. Exit codes: 0 success, 1 input or usage error,
2 numerical singularity (or a residual above ``--tol``).
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from ._linalg import SV_THRESHOLD
from .box import apply_box_direct, apply_box_piecewise, box_on_fiber, box_support_bounds
from .errors import BoxEqError, OutsideSampledRange, ProblemError, SingularSystem
from .fibers import (
    PROBLEM_SCHEMA,
    _matrix,
    _schema_check,
    decode_fiber,
    decode_kernel,
    encode_fiber,
    encode_matrix,
    load_json,
    parse_problem,
)
from .oracle import solve_dense
from .solver import solve
from .words import delta_seq, enumerate_delta_words, eval_word, fibonacci, sample_genericity

EXIT_OK, EXIT_INPUT, EXIT_SINGULAR = 0, 1, 2

BOX_SCHEMA = {
    "type": "object",
    "required": ["d", "N", "epsilon", "t0", "tf", "c", "fibers"],
    "properties": {
        key: PROBLEM_SCHEMA["properties"][key] for key in ("d", "N", "epsilon", "t0", "tf", "alpha", "c")
    }
    | {
        "fibers": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "required": ["offset", "u"],
                "properties": {"offset": {"type": "number"}, "u": {"type": "object"}},
            },
        }
    },
}


def _read(path: str) -> str:
    try:
        if path == "-":
            return sys.stdin.read()
        with open(path) as fh:
            return fh.read()
    except OSError as exc:
        raise ProblemError(f"cannot read input: {exc}", "--input") from None


def _emit(doc: dict, path: str | None) -> None:
    text = json.dumps(doc, indent=1)
    if path in (None, "-"):
        print(text)
    else:
        with open(path, "w") as fh:
            fh.write(text + "\n")


def _require_input(args) -> str:
    if not args.input:
        raise ProblemError("--input is required", "--input")
    return _read(args.input)


def _report_exit(report, args) -> int:
    doc = report.to_dict()
    doc["tol"] = args.tol
    doc["ok"] = report.residual_rel <= args.tol
    _emit(doc, args.output)
    return EXIT_OK if doc["ok"] else EXIT_SINGULAR


def cmd_solve(args) -> int:
    problem = parse_problem(_require_input(args), args.sv_threshold)
    return _report_exit(solve(problem, args.method), args)


def cmd_oracle(args) -> int:
    problem = parse_problem(_require_input(args), args.sv_threshold)
    return _report_exit(solve_dense(problem), args)


def cmd_box(args) -> int:
    doc = load_json(_require_input(args))
    _schema_check(doc, BOX_SCHEMA)
    kernel, window = decode_kernel(doc)
    fibers = [decode_fiber(raw, kernel.d, f"fibers/{i}", key="u") for i, raw in enumerate(doc["fibers"])]
    out_fibers, worst = [], 0.0
    for fib in fibers:
        if not fib.covers(0, window.ell(fib.offset)):
            raise ProblemError(f"u must be sampled on [0, {window.ell(fib.offset)}]", "fibers")
        boxu = box_on_fiber(fib, kernel, window)
        out_fibers.append(encode_fiber(boxu, "box_u"))
        if args.check:
            for n in boxu.indices():
                t = window.time(fib.offset, n)
                a = apply_box_direct(fib, kernel, window, t)
                b = apply_box_piecewise(fib, kernel, window, t)
                worst = max(worst, float(np.abs(a - b).max()))
    lo, hi = box_support_bounds(kernel, window)
    res = {"support": [lo, hi], "fibers": out_fibers}
    if args.check:
        res["check"] = {"max_abs_diff_piecewise_direct": worst, "ok": worst <= args.tol}
    _emit(res, args.output)
    return EXIT_OK if (not args.check or res["check"]["ok"]) else EXIT_SINGULAR


def cmd_delta(args) -> int:
    if args.n is None or args.n < 0:
        raise ProblemError("--n must be a non-negative integer", "--n")
    words = enumerate_delta_words(args.n)
    res = {
        "n": args.n,
        "count": len(words),
        "fibonacci": fibonacci(args.n),
        "count_ok": len(words) == fibonacci(args.n),
        "words": [{"exponents": list(w.exponents), "word": str(w)} for w in words],
    }
    ok = res["count_ok"]
    if args.matrices:
        mats = load_json(_read(args.matrices))
        if not isinstance(mats, dict) or "beta" not in mats or "gamma" not in mats:
            raise ProblemError("matrices file needs 'beta' and 'gamma'", "--matrices")
        d = len(mats["beta"])
        beta, gamma = _matrix(mats["beta"], d, "beta"), _matrix(mats["gamma"], d, "gamma")
        delta = delta_seq(beta, gamma, args.n)[args.n]
        word_sum = sum((eval_word(w, beta, gamma) for w in words), np.zeros((d, d), dtype=complex))
        diff = float(np.abs(delta - word_sum).max() / max(1.0, np.abs(delta).max()))
        res["delta"] = encode_matrix(delta)
        res["word_sum_rel_diff"] = diff
        ok = ok and diff <= args.tol
    _emit(res, args.output)
    return EXIT_OK if ok else EXIT_SINGULAR


def cmd_genericity(args) -> int:
    if args.seed is None:
        raise ProblemError("--seed is required for randomized commands", "--seed")
    if args.trials < 1:
        raise ProblemError("--trials must be >= 1", "--trials")
    if args.d < 1 or args.nmax < 0:
        raise ProblemError("--d must be >= 1 and --nmax >= 0", "--d")
    beta = np.zeros((args.d, args.d)) if args.force_beta_zero else None
    report = sample_genericity(args.d, args.nmax, args.trials, args.seed, args.threshold, beta=beta)
    _emit(report.to_dict(), args.output)
    return EXIT_OK if report.failures == 0 else EXIT_SINGULAR


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_INPUT)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--input", help="input JSON file ('-' for stdin)")
    common.add_argument("--output", help="output file (default stdout)")
    common.add_argument("--tol", type=float, default=1e-8, help="residual acceptance tolerance")
    common.add_argument("--sv-threshold", type=float, default=SV_THRESHOLD, help="singular-value ratio threshold")
    common.add_argument("--seed", type=int, default=None)

    parser = _Parser(prog="boxeq", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("solve", parents=[common], help="structured solver")
    p.add_argument("--method", choices=["auto", "closed", "general"], default="auto")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("oracle", parents=[common], help="dense brute-force solver")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("box", parents=[common], help="apply the box operator to sampled u")
    p.add_argument("--check", action="store_true", help="cross-check piecewise against direct evaluation")
    p.set_defaults(func=cmd_box)

    p = sub.add_parser("delta", parents=[common], help="words of delta_n")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--matrices", help="JSON file with 'beta' and 'gamma' matrices")
    p.set_defaults(func=cmd_delta)

    p = sub.add_parser("genericity", parents=[common], help="sample random (beta, gamma) pairs")
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--nmax", type=int, default=10)
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--threshold", type=float, default=SV_THRESHOLD)
    p.add_argument("--force-beta-zero", action="store_true", help="pin beta = 0 (failure fixture)")
    p.set_defaults(func=cmd_genericity)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except SingularSystem as exc:
        _emit({"error": "singular", "message": str(exc), "name": exc.name, "sv_ratio": exc.ratio,
               "threshold": exc.threshold}, args.output)
        print(f"boxeq: {exc}", file=sys.stderr)
        return EXIT_SINGULAR
    except (ProblemError, OutsideSampledRange, BoxEqError) as exc:
        print(f"boxeq: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
