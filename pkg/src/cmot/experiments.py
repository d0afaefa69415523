"""Discretize-and-resolve experiments and the irrational rotation example.

``run_gamma_experiment`` discretizes a plan level by level, re-solves the
transport problem between the discretized marginals and records how far the
discretized plan is from that minimum. ``run_counterexample`` builds the
rotation plan ``x -> x + alpha (mod 1)`` sampled on ``m`` grid points and
certifies it under the indicator cost ``1 if x = y else 2``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import mpmath

from .costs import CostSpec, objective_value, sup_cost
from .discretization import discretize_plan, plan_partition
from .measures import (FLOAT, RATIONAL, DiscreteCoupling, DiscreteMeasure, FactorSpace,
                       bl_discrepancy, marginals)
from .monotonicity import (AuditReport, Certificate, check_cm, check_finite_optimality,
                           check_icm)
from .solvers import DEFAULT_MAX_CELLS, GuardExceeded, MotInstance, Solution, solve

ALPHA_TOKENS = {
    "sqrt2m1": lambda: mpmath.sqrt(2) - 1,
    "golden": lambda: (mpmath.sqrt(5) - 1) / 2,
}


def _tol(*values) -> float:
    return 1e-9 if any(isinstance(v, float) for v in values) else 0


# --- fixtures -----------------------------------------------------------------------


def parse_alpha(alpha):
    """``Fraction`` for exact input ("p/q", ints, Fractions), else an mpmath number.

    Accepts the symbolic tokens ``"sqrt2m1"`` and ``"golden"``.
    """
    if isinstance(alpha, str):
        token = alpha.strip()
        if token in ALPHA_TOKENS:
            with mpmath.workdps(40):
                return ALPHA_TOKENS[token]()
        return Fraction(token)
    if isinstance(alpha, (int, Fraction)):
        return Fraction(alpha)
    return mpmath.mpf(alpha)


def rotation_plan(alpha, m: int) -> DiscreteCoupling:
    """Uniform plan on ``{(i/m, frac(i/m + alpha))}``, ``i = 0..m-1``.

    Exact in rational mode when ``alpha`` is rational; otherwise the fractional
    parts are computed with 40 significant digits and rounded to floats.
    """
    if m < 1:
        raise ValueError("m must be positive")
    a = parse_alpha(alpha)
    unit = FactorSpace.interval(0, 1)
    if isinstance(a, Fraction):
        atoms = tuple((((Fraction(i, m),), ((Fraction(i, m) + a) % 1,)), Fraction(1, m))
                      for i in range(m))
        return DiscreteCoupling((unit, unit), atoms, RATIONAL)
    with mpmath.workdps(40):
        ys = [float(mpmath.frac(mpmath.mpf(i) / m + a)) for i in range(m)]
    atoms = tuple((((i / m,), (y,)), 1.0 / m) for i, y in enumerate(ys))
    return DiscreteCoupling((unit, unit), atoms, FLOAT)


def shift_plan(m: int, shift=Fraction(1, 2)) -> DiscreteCoupling:
    """Monotone plan from the uniform grid ``{i/m}`` on [0, 1] to its translate by ``shift``."""
    shift = Fraction(shift)
    atoms = tuple((((Fraction(i, m),), (Fraction(i, m) + shift,)), Fraction(1, m)) for i in range(m))
    return DiscreteCoupling((FactorSpace.interval(0, 1), FactorSpace.interval(0, 1 + shift)),
                            atoms, RATIONAL)


def identity_plan(m: int) -> DiscreteCoupling:
    return rotation_plan(0, m)


# --- discretize-and-resolve ---------------------------------------------------------


@dataclass
class LevelRecord:
    level: int
    delta: float
    marginals: list
    min_value: object
    minimizer: Optional[DiscreteCoupling]
    objective_alpha: object
    gap: object
    discrepancy_to_limit: Optional[float]
    analytic_gap: object = None


@dataclass
class GammaRun:
    plan: DiscreteCoupling
    cost: CostSpec
    objective: str
    levels: list
    records: list = field(default_factory=list)
    limit: Optional[Solution] = None
    analytic: object = None
    status: str = "complete"
    message: str = ""

    @property
    def min_values(self) -> list:
        return [r.min_value for r in self.records]

    @property
    def gaps(self) -> list:
        return [r.gap for r in self.records]


def run_gamma_experiment(plan: DiscreteCoupling, cost: CostSpec, objective: str,
                         levels: Sequence[int], analytic=None, delta_schedule=None,
                         rep_rule: str = "lex", max_cells: int = DEFAULT_MAX_CELLS,
                         dict_size: int = 8) -> GammaRun:
    """Discretize ``plan`` at each level and re-solve between the discretized marginals.

    Per level: ``min_value`` is the optimum between the marginals of the
    discretized plan ``alpha_n``, ``gap = objective(alpha_n) - min_value`` and,
    when ``analytic`` is given, ``analytic_gap = objective(alpha_n) - analytic``.
    A level that trips the solver guard ends the run with status
    ``"guard_exceeded"``; the records gathered so far are kept.
    """
    run = GammaRun(plan, cost, objective, list(levels), analytic=analytic)
    try:
        run.limit = solve(MotInstance(tuple(marginals(plan)), cost, objective), max_cells)
    except GuardExceeded:
        run.limit = None
    for n in levels:
        part = plan_partition(plan, n, delta_schedule)
        alpha = discretize_plan(plan, part, rep_rule)
        margs = marginals(alpha)
        try:
            sol = solve(MotInstance(tuple(margs), cost, objective), max_cells)
        except GuardExceeded as exc:
            run.status, run.message = "guard_exceeded", f"level {n}: {exc}"
            break
        value = objective_value(cost, alpha, objective)
        disc = None
        if run.limit is not None and run.limit.plan is not None:
            disc = bl_discrepancy(sol.plan, run.limit.plan, dict_size)
        run.records.append(LevelRecord(
            level=n, delta=part.delta, marginals=margs, min_value=sol.value, minimizer=sol.plan,
            objective_alpha=value, gap=value - sol.value, discrepancy_to_limit=disc,
            analytic_gap=None if analytic is None else value - analytic))
    return run


@dataclass
class Verdict:
    passed: bool
    failed_stage: Optional[str]
    certificate: Optional[Certificate]
    audit: Optional[AuditReport]
    gamma: Optional[GammaRun]
    analytic_gap: object = None

    @property
    def label(self) -> str:
        return "PASS" if self.passed else "FAIL"


def verify_optimality_theorem(plan: DiscreteCoupling, cost: CostSpec, objective: str, k_max: int,
                              levels: Sequence[int], trials: int = 50, l_max: Optional[int] = None,
                              seed: int = 0, analytic=None, max_cells: int = DEFAULT_MAX_CELLS
                              ) -> Verdict:
    """Run the monotonicity check, the finite-optimality audit and the level experiment.

    Stops at the first failing stage: ``"monotonicity"`` (a certificate was
    found), ``"finite_optimality"`` (a submeasure beats its own optimum) or
    ``"gamma"`` (some level has a positive gap, or the plan's objective exceeds
    ``analytic``).
    """
    checker = check_cm if objective == "sum" else check_icm
    cert = checker(plan.support, cost, k_max)
    if cert is not None:
        return Verdict(False, "monotonicity", cert, None, None)
    audit = check_finite_optimality(plan, cost, objective, trials, l_max or k_max, seed)
    if not audit.passed:
        return Verdict(False, "finite_optimality", None, audit, None)
    run = run_gamma_experiment(plan, cost, objective, levels, analytic=analytic, max_cells=max_cells)
    ok = run.status == "complete" and all(g <= _tol(g) for g in run.gaps)
    analytic_gap = None
    if analytic is not None:
        value = objective_value(cost, plan, objective)
        analytic_gap = value - analytic
        ok = ok and analytic_gap <= _tol(analytic_gap)
    return Verdict(ok, None if ok else "gamma", None, audit, run, analytic_gap)


# --- rotation counterexample --------------------------------------------------------


@dataclass
class CounterexampleRun:
    alpha: object
    m: int
    k_max: int
    certificate: Optional[Certificate]
    sup_rotation: object
    sup_rotation_optimum: object
    sup_identity: object
    sup_identity_optimum: object
    closure_expected: bool

    @property
    def consistent(self) -> bool:
        """Certificate presence matches the cycle-closure prediction."""
        if self.closure_expected:
            c = self.certificate
            return c is not None and c.before == 2 and c.after == 1
        return self.certificate is None


def run_counterexample(alpha, m: int, k_max: int) -> CounterexampleRun:
    """ICM check and sup costs for the rotation plan and the identity plan.

    A certificate is expected exactly when the orbit ``x, x + alpha, ...``
    closes inside the sampled grid within ``k_max`` steps: ``alpha = p/q``
    rational with ``q <= k_max`` and ``m * alpha`` an integer.
    """
    if m < 2 or k_max < 2:
        raise ValueError("need m >= 2 and k_max >= 2")
    a = parse_alpha(alpha)
    cost = CostSpec.equality_indicator(1, 2)
    plan = rotation_plan(a, m)
    cert = check_icm(plan.support, cost, k_max)
    rot_opt = solve(MotInstance(tuple(marginals(plan)), cost, "max"), max_cells=m * m).value
    ident = identity_plan(m)
    id_opt = solve(MotInstance(tuple(marginals(ident)), cost, "max"), max_cells=m * m).value
    closes = (isinstance(a, Fraction) and a % 1 != 0 and (a % 1).denominator <= k_max
              and (m * a).denominator == 1)
    return CounterexampleRun(a, m, k_max, cert, sup_cost(cost, plan), rot_opt,
                             sup_cost(cost, ident), id_opt, closes)


def identity_contrast(m: int) -> tuple:
    """(optimal sup cost, sup cost of the identity plan) with both marginals on the same grid."""
    cost = CostSpec.equality_indicator(1, 2)
    grid = DiscreteMeasure.uniform(FactorSpace.interval(0, 1), [Fraction(i, m) for i in range(m)])
    best = solve(MotInstance((grid, grid), cost, "max"), max_cells=m * m).value
    return best, sup_cost(cost, identity_plan(m))


__all__ = ["rotation_plan", "shift_plan", "identity_plan", "parse_alpha", "run_gamma_experiment",
           "verify_optimality_theorem", "run_counterexample", "identity_contrast", "GammaRun",
           "LevelRecord", "Verdict", "CounterexampleRun"]
