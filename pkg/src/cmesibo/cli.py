"""Command-line front end: runner, ask/tell stepping, and validation suite.

Exit codes: 0 success, 1 numerical or validation failure, 2 usage error.
The default output directory is the current directory or ``CMESIBO_OUT_DIR``.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .domain import Box
from .gp import NumericalError
from .loop import METHODS, BoConfig, Optimizer, ProblemDescriptor, StateError
from .problems import BENCHMARKS, get_problem
from .session import SessionError, load_session, problem_ref, save_session
from .validation import (
    check_a_gamma,
    check_theorem_bounds,
    demo_negativity,
    kde_mi_oracle,
    toy_state,
)
from .acquisition import cmes_ibo_values
from .maxvalue import draw_max_values_grid


def _out_dir() -> str:
    return os.environ.get("CMESIBO_OUT_DIR", ".")


def _build_config(args) -> BoConfig:
    return BoConfig(
        method=args.method,
        K=args.k,
        Q=args.batch,
        T=getattr(args, "iters", 0),
        n_init=args.n_init,
        seed=args.seed,
    )


def _add_common(p):
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--method", choices=METHODS, default="cmes-ibo")
    p.add_argument("--batch", type=int, default=1, help="batch size Q")
    p.add_argument("--k", type=int, default=10, help="Monte Carlo sample size K")
    p.add_argument("--n-init", type=int, default=5, help="initial design size")


def _load_problem(args):
    if getattr(args, "problem_file", None):
        with open(args.problem_file) as fh:
            d = json.load(fh)
        return ProblemDescriptor(
            d["name"],
            Box(np.array(d["lower"], dtype=float), np.array(d["upper"], dtype=float)),
            [float(z) for z in d["thresholds"]],
        )
    return get_problem(args.problem)


# -- subcommands -----------------------------------------------------------


def cmd_run(args) -> int:
    problem = get_problem(args.problem)
    cfg = _build_config(args)
    opt = Optimizer(problem, cfg)
    base = os.path.join(
        _out_dir(), f"{args.problem}_{args.method}_seed{args.seed}"
    )
    out_csv = args.out or base + ".csv"
    out_session = args.session or base + ".session.json"
    code = 0
    try:
        opt.tell(problem.evaluate(opt.ask()))
        for _ in range(cfg.T):
            opt.tell(problem.evaluate(opt.ask()))
    except NumericalError as exc:
        print(f"numerical abort: {exc}", file=sys.stderr)
        code = 1
    opt.trace.write_csv(out_csv)
    save_session(opt, problem_ref(problem), out_session)
    print(f"trace: {out_csv}")
    print(f"session: {out_session}")
    return code


def _print_points(X):
    for row in np.atleast_2d(X):
        print(" ".join(repr(float(v)) for v in row))


def cmd_ask(args) -> int:
    if os.path.exists(args.session):
        opt, ref = load_session(args.session)
    else:
        if not (args.problem or args.problem_file):
            print("new session needs --problem or --problem-file", file=sys.stderr)
            return 2
        problem = _load_problem(args)
        opt = Optimizer(problem, _build_config(args))
        ref = problem_ref(problem)
    try:
        X = opt.ask()
    except StateError as exc:
        print(f"state error: {exc}", file=sys.stderr)
        return 1
    save_session(opt, ref, args.session)
    _print_points(X)
    return 0


def cmd_tell(args) -> int:
    try:
        opt, ref = load_session(args.session)
    except (FileNotFoundError, SessionError) as exc:
        print(f"cannot load session: {exc}", file=sys.stderr)
        return 2
    if opt.pending is None:
        print("state error: no pending batch; call ask first", file=sys.stderr)
        return 1
    q = opt.pending.shape[0]
    width = 1 + opt.num_constraints
    vals = [float(v) for v in args.values]
    if len(vals) != q * width:
        print(
            f"expected {q * width} values ({q} rows of f g1..g{width - 1}), "
            f"got {len(vals)}",
            file=sys.stderr,
        )
        return 2
    rec = opt.tell(np.array(vals).reshape(q, width))
    save_session(opt, ref, args.session)
    print("recommendation: " + " ".join(repr(float(v)) for v in rec.point))
    print(f"feasible_by_rule: {int(rec.feasible_by_rule)}")
    return 0


def cmd_recommend(args) -> int:
    try:
        opt, _ = load_session(args.session)
    except (FileNotFoundError, SessionError) as exc:
        print(f"cannot load session: {exc}", file=sys.stderr)
        return 2
    if not opt.initialized:
        print("state error: no observations yet", file=sys.stderr)
        return 1
    from .loop import recommend

    rec = recommend(opt.bundle(), opt.problem.domain, opt.cfg)
    print("recommendation: " + " ".join(repr(float(v)) for v in rec.point))
    print(f"feasible_by_rule: {int(rec.feasible_by_rule)}")
    print(f"predicted_mean: {rec.predicted_mean!r}")
    return 0


def cmd_demo_negativity(args) -> int:
    c_values = tuple(int(c) for c in args.c_values.split(","))
    report = demo_negativity(
        c_values, seed=args.seed, out_dir=args.out_dir or _out_dir()
    )
    for cur in report.curves:
        print(
            f"C={cur.C}: min_direct={cur.min_cmes:.6f} "
            f"min_lower_bound={cur.min_cmes_ibo:.6f} "
            f"argmax_lb={cur.argmax_cmes_ibo} argmax_kde={cur.argmax_kde_mi} "
            f"corr={cur.correlation:.3f}"
        )
    for msg in report.failures:
        print(f"FAIL: {msg}", file=sys.stderr)
    return 0 if report.passed else 1


def cmd_validate(args) -> int:
    ok = True
    rng = np.random.default_rng(args.seed)

    a = check_a_gamma()
    print(
        f"a(0)={a.at_zero} a(-0.84)={a.at_minus_084:.6f} "
        f"a(-30)={a.at_minus_30:.2e} -> {'pass' if a.passed else 'FAIL'}"
    )
    ok &= a.passed

    state = toy_state(4)
    x_list = [state.grid[i] for i in (20, 60, 100, 140, 180)]
    rep = check_theorem_bounds(
        state.bundle,
        state.grid,
        x_list,
        rng,
        n_samples=args.samples,
        n_replicates=max(args.samples // 10, 1000),
    )
    for c in rep.variance_checks:
        print(f"variance at x={c.x[0]:.3f}: {c.variance:.4f} <= 2 -> "
              f"{'pass' if c.passed else 'FAIL'}")
    for c in rep.concentration_checks:
        print(
            f"concentration K={c.K} xi={c.xi}: tail={c.empirical_tail:.4f} "
            f"bound={c.bound:.4f} -> {'pass' if c.passed else 'FAIL'}"
        )
    ok &= rep.passed

    fstars = draw_max_values_grid(state.bundle, state.grid, 2000, rng)
    ibo = cmes_ibo_values(state.bundle, state.grid, fstars)
    kde = kde_mi_oracle(state.bundle, state.grid, 100, 200, rng)
    agree = int(np.argmax(ibo)) == int(np.argmax(kde.mi))
    corr = float(np.corrcoef(ibo, kde.mi)[0, 1])
    print(f"kde-mi argmax agreement: {agree} (corr={corr:.3f}) -> "
          f"{'pass' if agree else 'FAIL'}")
    ok &= agree
    return 0 if ok else 1


def cmd_list_problems(args) -> int:
    for name in sorted(BENCHMARKS):
        p = BENCHMARKS[name]()
        print(f"{name}: d={p.dim}, C={p.num_constraints}")
    print("gp-synthetic-<seed>: d=2, C=10 (drawn from a feature prior)")
    return 0


# -- parser ----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="cmesibo",
        description="Constrained Bayesian optimization with max-value "
        "entropy-search acquisitions.",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run a full loop on a built-in problem")
    p.add_argument("--problem", required=True)
    p.add_argument("--iters", type=int, required=True)
    p.add_argument("--out", default=None, help="trace CSV path")
    p.add_argument("--session", default=None, help="session JSON path")
    _add_common(p)
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("ask", help="get the next query batch")
    p.add_argument("--session", required=True)
    p.add_argument("--problem", default=None)
    p.add_argument("--problem-file", default=None)
    p.add_argument("--iters", type=int, default=0)
    _add_common(p)
    p.set_defaults(fn=cmd_ask)

    p = sub.add_parser("tell", help="report outputs for the pending batch")
    p.add_argument("--session", required=True)
    p.add_argument("values", nargs="+", help="row-major f g1..gC per point")
    p.set_defaults(fn=cmd_tell)

    p = sub.add_parser("recommend", help="print the current recommendation")
    p.add_argument("--session", required=True)
    p.set_defaults(fn=cmd_recommend)

    p = sub.add_parser("demo-negativity", help="negativity demonstration")
    p.add_argument("--c-values", default="4,5,6,7")
    p.add_argument("--out-dir", default=None)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=cmd_demo_negativity)

    p = sub.add_parser("validate", help="run the analytical validation suite")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--samples", type=int, default=20000)
    p.set_defaults(fn=cmd_validate)

    p = sub.add_parser("list-problems", help="list built-in problems")
    p.set_defaults(fn=cmd_list_problems)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
