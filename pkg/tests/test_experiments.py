from fractions import Fraction as F

import numpy as np
import pytest

from cmot.costs import CostSpec, sup_cost
from cmot.experiments import (identity_contrast, identity_plan, parse_alpha, rotation_plan,
                              run_counterexample, run_gamma_experiment, shift_plan,
                              verify_optimality_theorem)
from cmot.measures import DiscreteCoupling, marginals
from cmot.monotonicity import check_cm
from cmot.solvers import MotInstance, solve

from conftest import UNIT, grid_points, uniform_measure

P2 = CostSpec.power_distance(2)
IND = CostSpec.equality_indicator(1, 2)


def test_parse_alpha():
    assert parse_alpha("1/3") == F(1, 3)
    assert abs(float(parse_alpha("sqrt2m1")) - (2 ** 0.5 - 1)) < 1e-15
    assert abs(float(parse_alpha("golden")) - 0.6180339887498949) < 1e-15
    with pytest.raises(ValueError):
        parse_alpha("pi")


def test_rotation_plan_marginals():
    plan = rotation_plan("1/3", 30)
    assert plan.mode == "rational" and len(plan) == 30
    xs, ys = marginals(plan)
    assert sorted(xs.points) == sorted(ys.points)
    irr = rotation_plan("sqrt2m1", 30)
    xs, ys = marginals(irr)
    assert not set(xs.points) & set(ys.points)


def test_identity_grid_min_is_zero():
    run = run_gamma_experiment(identity_plan(8), P2, "sum", [1, 2, 3, 4])
    assert run.status == "complete"
    assert run.min_values == [0, 0, 0, 0]


def test_shift_grid_reaches_quarter():
    # monotone rearrangement of a rigid shift: cost shift^2 = 1/4
    run = run_gamma_experiment(shift_plan(8), P2, "sum", [1, 2, 3, 4], analytic=F(1, 4))
    assert run.limit.value == F(1, 4)
    errs = [abs(v - F(1, 4)) for v in run.min_values]
    assert all(b <= a for a, b in zip(errs, errs[1:]))
    assert errs[-1] == 0


def test_rotation_gap_against_continuum_optimum():
    run = run_gamma_experiment(rotation_plan("sqrt2m1", 30), IND, "max", [1, 2, 3, 4, 5],
                               analytic=1)
    # C_inf(alpha_n) = 2 at every level while the continuum optimum is 1
    assert [r.objective_alpha for r in run.records] == [2] * 5
    assert [r.analytic_gap for r in run.records] == [1] * 5
    # the discretized marginals share no point, so on them 2 is already optimal
    assert run.gaps == [0] * 5


def test_guard_stops_run():
    run = run_gamma_experiment(shift_plan(16), P2, "sum", [1, 5], max_cells=100)
    assert run.status == "guard_exceeded"
    assert [r.level for r in run.records] == [1]


def test_solver_output_passes():
    rng = np.random.default_rng(11)
    mu = uniform_measure(grid_points(rng, 5, den=12))
    nu = uniform_measure(grid_points(rng, 5, den=12))
    plan = solve(MotInstance((mu, nu), P2, "sum")).plan
    verdict = verify_optimality_theorem(plan, P2, "sum", k_max=3, levels=[1, 2, 3], trials=20)
    assert verdict.passed and verdict.label == "PASS"


def test_anti_monotone_fails_at_monotonicity():
    plan = DiscreteCoupling((UNIT, UNIT), tuple((((F(i, 3),), (F(3 - i, 3),)), F(1, 4))
                                                for i in range(4)))
    verdict = verify_optimality_theorem(plan, P2, "sum", k_max=3, levels=[1, 2])
    assert not verdict.passed
    assert verdict.failed_stage == "monotonicity"
    assert verdict.certificate.k == 2


def test_rotation_fails_only_at_gamma_stage():
    verdict = verify_optimality_theorem(rotation_plan("sqrt2m1", 30), IND, "max", k_max=4,
                                        levels=[1, 2, 3], trials=20, analytic=1)
    assert verdict.certificate is None
    assert verdict.audit.passed
    assert verdict.failed_stage == "gamma"
    assert verdict.analytic_gap == 1


def test_counterexample_irrational():
    res = run_counterexample("sqrt2m1", 30, 4)
    assert res.certificate is None
    assert res.sup_rotation == 2 and res.sup_rotation_optimum == 2
    assert res.consistent


def test_counterexample_rational_control():
    res = run_counterexample("1/3", 30, 3)
    cert = res.certificate
    assert cert is not None and cert.k == 3 and cert.before == 2 and cert.after == 1
    assert res.closure_expected and res.consistent


def test_counterexample_zero_shift():
    res = run_counterexample("0", 30, 3)
    assert res.certificate is None
    assert res.sup_rotation == 1 and res.consistent


def test_identity_contrast():
    best, ident = identity_contrast(30)
    assert best == 1 and ident == 1
    assert sup_cost(IND, rotation_plan("sqrt2m1", 30)) == 2


@pytest.mark.parametrize("alpha", ["sqrt2m1", "golden", "1/7"])
def test_no_closure_below_period(alpha):
    # 1/7 needs a 7-cycle, so it is invisible at k <= 4 as well
    res = run_counterexample(alpha, 21, 4)
    assert res.certificate is None and res.consistent


def test_small_plans_have_zero_gap():
    # a CM plan whose discretizations keep at most k_max atoms
    plan = DiscreteCoupling((UNIT, UNIT), ((((F(0),), (F(1, 10),)), F(1, 3)),
                                           (((F(1, 2),), (F(3, 5),)), F(1, 3)),
                                           (((F(1),), (F(9, 10),)), F(1, 3))))
    assert check_cm(plan.support, P2, 3) is None
    run = run_gamma_experiment(plan, P2, "sum", [1, 2, 3, 4])
    assert all(len(r.minimizer) <= 3 for r in run.records)
    assert run.gaps == [0, 0, 0, 0]
