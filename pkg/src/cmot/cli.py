"""Command-line driver.

Exit codes: 0 success or PASS, 1 a violation was found (certificate, positive
audit gap, failed verdict), 2 usage or parse error, 3 refused by a resource
guard.
"""
from __future__ import annotations

import argparse
import sys
from fractions import Fraction

from . import serialization as ser
from .costs import objective_value
from .discretization import convergence_report, discretize_plan, plan_partition
from .experiments import (identity_contrast, run_counterexample, run_gamma_experiment,
                          verify_optimality_theorem)
from .measures import FLOAT, RATIONAL, to_float
from .monotonicity import (DEFAULT_MAX_EVALS, check_cm, check_finite_optimality, check_icm,
                           rationalize_pair)
from .solvers import DEFAULT_MAX_CELLS, GuardExceeded, MotInstance, solve

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_GUARD = 0, 1, 2, 3


class UsageError(ValueError):
    pass


def _positive(kind):
    def parse(text):
        try:
            v = kind(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
        if v <= 0:
            raise argparse.ArgumentTypeError(f"must be positive: {text!r}")
        return v
    return parse


def _fraction(text):
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a rational number: {text!r}") from None


def _emit(args, payload: dict):
    text = ser.dumps(payload)
    if args.out:
        ser.write_text(args.out, text)
    else:
        sys.stdout.write(text)


def _with_mode(obj, mode):
    if mode is None or obj.mode == mode:
        return obj
    if mode == FLOAT:
        return to_float(obj)
    raise UsageError("float input cannot be converted to rational mode; use rationalize")


def _need(args, *names):
    missing = [f"--{n.replace('_', '-')}" for n in names if getattr(args, n) in (None, [])]
    if missing:
        raise UsageError(f"{args.command} requires {', '.join(missing)}")


def _load(path):
    try:
        return ser.load_json(path)
    except ser.FormatError:
        raise
    except Exception as exc:  # pragma: no cover - defensive
        raise ser.FormatError(str(exc), str(path)) from None


def _from_file(path, decoder):
    data = _load(path)
    try:
        return decoder(data)
    except ser.FormatError as exc:
        raise ser.FormatError(str(exc), str(path)) from None


# --- commands -----------------------------------------------------------------------


def cmd_solve(args) -> int:
    _need(args, "instance")
    inst = _from_file(args.instance, ser.instance_from_json)
    if args.objective:
        inst = MotInstance(inst.marginals, inst.cost, args.objective)
    if args.mode:
        inst = MotInstance(tuple(_with_mode(m, args.mode) for m in inst.marginals), inst.cost,
                           inst.objective)
    sol = solve(inst, args.guard_cells)
    _emit(args, ser.solution_to_json(sol))
    return EXIT_OK


def _check(args, checker) -> int:
    _need(args, "plan", "cost")
    plan = _with_mode(_from_file(args.plan, ser.coupling_from_json), args.mode)
    cost = _from_file(args.cost, ser.cost_from_json)
    cert = checker(plan.support, cost, args.kmax, args.guard_evals)
    _emit(args, {"k_max": args.kmax, "aggregate": "sum" if checker is check_cm else "max",
                 "certificate": ser.certificate_to_json(cert)})
    return EXIT_OK if cert is None else EXIT_FAIL


def cmd_check_cm(args) -> int:
    return _check(args, check_cm)


def cmd_check_icm(args) -> int:
    return _check(args, check_icm)


def cmd_audit_finite(args) -> int:
    _need(args, "plan", "cost")
    plan = _with_mode(_from_file(args.plan, ser.coupling_from_json), args.mode)
    cost = _from_file(args.cost, ser.cost_from_json)
    objective = args.objective or "sum"
    rep = check_finite_optimality(plan, cost, objective, args.trials, args.kmax, args.seed,
                                  args.guard_cells)
    _emit(args, {"objective": objective, "trials": args.trials, "l_max": args.kmax,
                 "seed": args.seed, "sizes": list(rep.sizes),
                 "gaps": [ser.encode_number(g) for g in rep.gaps],
                 "verdict": "PASS" if rep.passed else "FAIL"})
    return EXIT_OK if rep.passed else EXIT_FAIL


def cmd_rationalize(args) -> int:
    _need(args, "plan")
    if len(args.plan) != 2:
        raise UsageError("rationalize needs --plan A.json B.json")
    a, b = (_from_file(p, ser.coupling_from_json) for p in args.plan)
    try:
        qa, qb = rationalize_pair(a, b, args.eps)
    except ValueError as exc:
        if "positivity margin" in str(exc):
            print(f"refused: {exc}", file=sys.stderr)
            return EXIT_GUARD
        raise
    _emit(args, {"eps": ser.encode_number(args.eps), "a": ser.coupling_to_json(qa),
                 "b": ser.coupling_to_json(qb)})
    return EXIT_OK


def cmd_discretize(args) -> int:
    _need(args, "plan", "levels")
    plan = _with_mode(_from_file(args.plan, ser.coupling_from_json), args.mode)
    levels = []
    for n in args.levels:
        part = plan_partition(plan, n)
        levels.append({"partition": ser.partition_to_json(part),
                       "plan": ser.coupling_to_json(discretize_plan(plan, part))})
    _emit(args, {"levels": levels})
    if args.csv:
        _need(args, "cost")
        cost = _from_file(args.cost, ser.cost_from_json)
        rows = convergence_report(plan, cost, args.objective or "sum", args.levels)
        ser.write_text(args.csv, ser.convergence_csv(rows))
    return EXIT_OK


def cmd_gamma(args) -> int:
    if args.config:
        cfg = _from_file(args.config, ser.experiment_config_from_json)
    else:
        _need(args, "plan", "cost", "levels")
        cfg = {"plan": _from_file(args.plan, ser.coupling_from_json),
               "cost": _from_file(args.cost, ser.cost_from_json),
               "objective": args.objective or "sum", "levels": args.levels, "k_max": args.kmax}
    plan = _with_mode(cfg["plan"], args.mode)
    cost, objective = cfg["cost"], cfg["objective"]
    seed = cfg.get("seed", args.seed)
    trials = cfg.get("trials", args.trials)
    analytic = cfg.get("analytic")
    verdict = verify_optimality_theorem(plan, cost, objective, cfg["k_max"], cfg["levels"],
                                        trials=trials, seed=seed, analytic=analytic,
                                        max_cells=args.guard_cells)
    run = verdict.gamma
    if run is None and verdict.failed_stage is not None:
        # still report the level sweep so a failed verdict comes with numbers
        run = run_gamma_experiment(plan, cost, objective, cfg["levels"], analytic=analytic,
                                   max_cells=args.guard_cells)
    payload = {
        "verdict": verdict.label,
        "failed_stage": verdict.failed_stage,
        "objective": objective,
        "k_max": cfg["k_max"],
        "seed": seed,
        "plan_value": ser.encode_number(objective_value(cost, plan, objective)),
        "analytic": ser.encode_number(analytic),
        "certificate": ser.certificate_to_json(verdict.certificate),
        "audit_gaps": None if verdict.audit is None else
        [ser.encode_number(g) for g in verdict.audit.gaps],
        "status": run.status,
        "message": run.message,
        "levels": [{"n": r.level, "delta": r.delta, "min_value": ser.encode_number(r.min_value),
                    "objective_alpha": ser.encode_number(r.objective_alpha),
                    "gap": ser.encode_number(r.gap),
                    "analytic_gap": ser.encode_number(r.analytic_gap),
                    "discrepancy_to_limit": r.discrepancy_to_limit} for r in run.records],
    }
    _emit(args, payload)
    if args.csv:
        ser.write_text(args.csv, ser.gamma_csv(run))
    if run.status == "guard_exceeded":
        print(f"refused: {run.message}", file=sys.stderr)
        return EXIT_GUARD
    return EXIT_OK if verdict.passed else EXIT_FAIL


def cmd_counterexample(args) -> int:
    _need(args, "alpha")
    res = run_counterexample(args.alpha, args.m, args.kmax)
    best, ident = identity_contrast(args.m)
    alpha = res.alpha if isinstance(res.alpha, Fraction) else args.alpha
    _emit(args, {
        "alpha": str(alpha), "m": args.m, "k_max": args.kmax,
        "certificate": ser.certificate_to_json(res.certificate),
        "sup_rotation": ser.encode_number(res.sup_rotation),
        "sup_rotation_optimum": ser.encode_number(res.sup_rotation_optimum),
        "sup_identity": ser.encode_number(res.sup_identity),
        "sup_identity_optimum": ser.encode_number(res.sup_identity_optimum),
        "identity_contrast": {"optimum": ser.encode_number(best), "identity": ser.encode_number(ident)},
        "closure_expected": res.closure_expected,
        "consistent": res.consistent,
    })
    return EXIT_OK if res.certificate is None else EXIT_FAIL


COMMANDS = {
    "solve": cmd_solve,
    "check-cm": cmd_check_cm,
    "check-icm": cmd_check_icm,
    "audit-finite": cmd_audit_finite,
    "rationalize": cmd_rationalize,
    "discretize": cmd_discretize,
    "gamma": cmd_gamma,
    "counterexample": cmd_counterexample,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="cmot", description="Multi-marginal transport toolkit.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--instance")
        p.add_argument("--plan", nargs="+")
        p.add_argument("--cost")
        p.add_argument("--config")
        p.add_argument("--objective", choices=("sum", "max"))
        p.add_argument("--levels", type=int, nargs="+")
        p.add_argument("--kmax", type=_positive(int), default=3)
        p.add_argument("--mode", choices=(RATIONAL, FLOAT))
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--trials", type=_positive(int), default=50)
        p.add_argument("--eps", type=_fraction, default=Fraction(1, 100))
        p.add_argument("--alpha")
        p.add_argument("--m", type=_positive(int), default=30)
        p.add_argument("--out")
        p.add_argument("--csv")
        p.add_argument("--guard-cells", type=_positive(int), default=DEFAULT_MAX_CELLS)
        p.add_argument("--guard-evals", type=_positive(int), default=DEFAULT_MAX_EVALS)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.plan is not None and args.command != "rationalize":
        if len(args.plan) != 1:
            print(f"cmot: error: {args.command} takes a single --plan", file=sys.stderr)
            return EXIT_USAGE
        args.plan = args.plan[0]
    if args.levels is not None and any(n < 1 for n in args.levels):
        print("cmot: error: levels start at 1", file=sys.stderr)
        return EXIT_USAGE
    try:
        return COMMANDS[args.command](args)
    except GuardExceeded as exc:
        print(f"refused: {exc}", file=sys.stderr)
        return EXIT_GUARD
    except (ser.FormatError, UsageError) as exc:
        print(f"cmot: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (TypeError, ValueError) as exc:
        print(f"cmot: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
