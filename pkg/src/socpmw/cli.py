"""Command-line front end: ``solve``, ``generate``, ``check`` and ``cost``.

Exit codes: 0 success, 1 I/O or validation error, 2 promise violated
(``solve`` on a general SOCP), 3 certification failure (``check``).
"""
from __future__ import annotations

import argparse
import json
import sys
import time

import numpy as np

from .cost import CostReport, predict_costs
from .instance import (
    FeasibilityInstance,
    InstanceFormatError,
    SocpInstance,
    feasibility_check,
    has_errors,
    load_instance,
    load_point,
    validate,
)
from .jordan import JordanOverflowError
from .mw import OracleFailure, build_x_from_y, feasibility_solve
from .oracles import MODES, make_oracle
from .reduction import PROMISE_VIOLATED, bs_steps, solve
from .report import RunReport, floats, save_report, sparse_y, summary_line
from . import harness

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_PROMISE = 2
EXIT_CHECK_FAILED = 3


def _err(msg: str) -> int:
    print(f"error: {msg}", file=sys.stderr)
    return EXIT_ERROR


def _load_checked(path):
    inst = load_instance(path)
    diags = validate(inst)
    for d in diags:
        if d.severity != "error":
            print(f"warning: {d}", file=sys.stderr)
    return inst, diags


def _solve_feasibility(inst: FeasibilityInstance, args) -> RunReport:
    oracle = make_oracle(args.mode, args.seed)
    res = feasibility_solve(inst, oracle)
    x = build_x_from_y(inst, res.y)
    chk = feasibility_check(inst, x, slack=inst.theta, tol=args.tol)
    cost = CostReport(args.mode)
    cost.counts.update(oracle_calls=res.oracle_calls, mw_iterations=res.iterations)
    if args.mode != "direct":
        cost.counts["gibbs_draws"] = oracle.gibbs_draws
        cost.counts.update(oracle.sq_counters())
    if inst.m:
        cost.predicted = predict_costs(inst.r, inst.n, inst.m, inst.theta, mode=args.mode)
    return RunReport(
        kind="feasibility",
        status=res.status,
        mode=args.mode,
        seed=args.seed,
        y=sparse_y(res.y),
        x=floats(x.values),
        margins=floats(chk.margins),
        cost=cost.to_dict(),
        wall_ms=0.0,
        theta=inst.theta,
        certified=chk.passed if res.feasible else None,
        threads=args.threads,
    )


def _solve_socp(P: SocpInstance, args) -> RunReport:
    rep = solve(P, args.epsilon, args.mode, args.seed)
    cost = CostReport(args.mode, counts=dict(rep.counters))
    pred = predict_costs(P.r + 1, P.n + 1, P.m + 1, rep.theta, mode=args.mode)
    pred["T_bs"] = {"value": bs_steps(P.R_tilde, rep.theta), "formula": "ceil(log_{4/3}(1 / (2 R_tilde theta)))"}
    cost.predicted = pred
    return RunReport(
        kind="socp",
        status=rep.status,
        mode=args.mode,
        seed=args.seed,
        y=sparse_y(rep.y),
        x=floats(rep.x.values),
        margins=floats(rep.constraint_margins),
        cost=cost.to_dict(),
        wall_ms=0.0,
        g=float(rep.g),
        epsilon=float(args.epsilon),
        theta=float(rep.theta),
        objective=float(rep.objective),
        threads=args.threads,
        history=rep.history,
    )


def cmd_solve(args) -> int:
    if args.threads < 1:
        return _err("--threads must be at least 1")
    try:
        inst, diags = _load_checked(args.instance)
    except (OSError, InstanceFormatError) as exc:
        return _err(str(exc))
    is_socp = isinstance(inst, SocpInstance)
    if is_socp and args.theta is not None:
        return _err("--theta applies to feasibility instances; use --epsilon for an SOCP")
    if not is_socp and args.epsilon is not None:
        return _err("--epsilon applies to SOCP instances; use --theta for a feasibility instance")
    if is_socp and args.epsilon is None:
        return _err("--epsilon is required for an SOCP instance")
    if not is_socp:
        theta = args.theta if args.theta is not None else inst.theta
        inst = FeasibilityInstance(inst.partition, inst.A_blocks, inst.b, theta)
        diags = validate(inst)
    if has_errors(diags):
        for d in diags:
            if d.severity == "error":
                print(f"error: {d}", file=sys.stderr)
        return EXIT_ERROR
    start = time.perf_counter()
    try:
        report = _solve_socp(inst, args) if is_socp else _solve_feasibility(inst, args)
    except (ValueError, JordanOverflowError, OracleFailure) as exc:
        return _err(str(exc))
    report.wall_ms = (time.perf_counter() - start) * 1e3
    if args.out:
        try:
            save_report(args.out, report)
        except OSError as exc:
            return _err(str(exc))
    print(summary_line(report))
    return EXIT_PROMISE if report.status == PROMISE_VIOLATED else EXIT_OK


def _gen_params(args) -> dict:
    if args.recipe == "feasible":
        params = {"r": args.r, "m": args.m, "size_range": (args.size_min, args.size_max),
                  "slack_min": args.slack_min}
        if args.theta is not None:
            params["theta"] = args.theta
        return params
    if args.recipe == "infeasible":
        return {"theta": 0.1 if args.theta is None else args.theta, "r": args.r, "m": args.m,
                "sizes": args.size_max}
    return {}


def cmd_generate(args) -> int:
    try:
        gen = harness.generate(args.recipe, args.seed, **_gen_params(args))
        entry = harness.write_generated(args.out_dir, gen)
    except (OSError, ValueError) as exc:
        return _err(str(exc))
    print(json.dumps(entry, sort_keys=True))
    return EXIT_OK


def cmd_check(args) -> int:
    try:
        inst = load_instance(args.instance)
        x = load_point(args.point)
    except (OSError, InstanceFormatError) as exc:
        return _err(str(exc))
    if x.partition != inst.partition:
        return _err("point and instance have different cone partitions")
    socp = isinstance(inst, SocpInstance)
    chk = feasibility_check(inst, x, slack=args.slack, tol=args.tol, unit_trace=not socp)
    out = {
        "passed": chk.passed,
        "cone_ok": chk.cone_ok,
        "trace_ok": chk.trace_ok,
        "constraints_ok": chk.constraints_ok,
        "min_eigenvalue": chk.min_eigenvalue,
        "trace": chk.trace,
        "worst_violation": chk.worst_violation if inst.m else None,
        "margins": floats(chk.margins),
    }
    if socp and chk.trace > inst.R + args.tol:
        out["passed"] = False
        out["trace_ok"] = False
    print(json.dumps(out))
    return EXIT_OK if out["passed"] else EXIT_CHECK_FAILED


def cmd_cost(args) -> int:
    try:
        pred = predict_costs(args.r, args.n, args.m, args.theta, args.xi, args.eta, args.mode)
    except ValueError as exc:
        return _err(str(exc))
    print(json.dumps({"oracle_mode": args.mode, "predicted": pred}, indent=1))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="socpmw", description="Multiplicative-weights SOCP solver.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="solve a feasibility instance or an SOCP")
    s.add_argument("--instance", required=True)
    s.add_argument("--epsilon", type=float, help="target accuracy for an SOCP instance")
    s.add_argument("--theta", type=float, help="violation tolerance for a feasibility instance")
    s.add_argument("--mode", choices=sorted(MODES), default="direct")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", help="report file to write")
    s.add_argument("--tol", type=float, default=1e-9)
    s.add_argument("--threads", type=int, default=1)
    s.set_defaults(func=cmd_solve)

    g = sub.add_parser("generate", help="write a generated instance and its manifest entry")
    g.add_argument("--recipe", choices=("feasible", "infeasible", "tiny"), required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out-dir", required=True)
    g.add_argument("--r", type=int, default=3)
    g.add_argument("--m", type=int, default=5)
    g.add_argument("--size-min", type=int, default=1)
    g.add_argument("--size-max", type=int, default=8)
    g.add_argument("--slack-min", type=float, default=0.0)
    g.add_argument("--theta", type=float)
    g.set_defaults(func=cmd_generate)

    c = sub.add_parser("check", help="certify a point against an instance")
    c.add_argument("--instance", required=True)
    c.add_argument("--point", required=True)
    c.add_argument("--slack", type=float, default=0.0)
    c.add_argument("--tol", type=float, default=1e-9)
    c.set_defaults(func=cmd_check)

    k = sub.add_parser("cost", help="evaluate the closed-form counts")
    k.add_argument("--r", type=int, required=True)
    k.add_argument("--n", type=int, required=True)
    k.add_argument("--m", type=int, required=True)
    k.add_argument("--theta", type=float, required=True)
    k.add_argument("--xi", type=float)
    k.add_argument("--eta", type=float)
    k.add_argument("--mode", choices=sorted(MODES), default="sq")
    k.set_defaults(func=cmd_cost)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
