import math
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cmot.costs import (INF, CostSpec, continuity_envelope, eval_cost, integral_cost,
                        objective_value, sup_cost)
from cmot.experiments import identity_plan, rotation_plan
from cmot.measures import DiscreteCoupling, FactorSpace, mixture

from conftest import UNIT, random_plan

P2 = CostSpec.power_distance(2)
IND = CostSpec.equality_indicator(1, 2)


def test_power_distance_value():
    assert eval_cost(P2, ((0,), (1,))) == 1
    assert eval_cost(CostSpec.power_distance(1), ((F(0), F(0)), (F(3), F(4)))) == 5
    # irrational distance falls back to float
    assert math.isclose(eval_cost(CostSpec.power_distance(1), ((0, 0), (1, 1))), math.sqrt(2))


def test_equality_indicator_values():
    x, y = (F(1, 3),), (F(2, 3),)
    assert eval_cost(IND, (x, x)) == 1
    assert eval_cost(IND, (x, y)) == 2
    assert eval_cost(IND, ((0.5,), (0.5 + 1e-13,))) == 1


def test_barycenter_coincident_points():
    c = CostSpec.squared_sum_barycenter(3)
    assert eval_cost(c, ((0,), (0,), (0,))) == 0
    assert eval_cost(c, ((0,), (1,), (2,))) == 1 + 4 + 1


def test_tensor_by_index_and_point():
    c = CostSpec.tensor([[0, 1], ["inf", 2]], points=[[0, 1], [0, 1]])
    assert eval_cost(c, (0, 1)) == 1
    assert eval_cost(c, ((F(1),), (F(0),))) == INF
    with pytest.raises(IndexError):
        eval_cost(c, (2, 0))


def test_cost_spec_validation():
    with pytest.raises(ValueError):
        CostSpec.power_distance(0)
    with pytest.raises(ValueError):
        CostSpec.equality_indicator(3, 2)
    with pytest.raises(ValueError):
        CostSpec.tensor([[float("nan"), 0], [0, 0]])


def test_integral_cost_identity_is_zero():
    plan = identity_plan(5)
    assert integral_cost(P2, plan) == 0


def test_integral_cost_swap():
    plan = DiscreteCoupling((UNIT, UNIT), ((((0,), (1,)), F(1, 2)), (((1,), (0,)), F(1, 2))))
    assert integral_cost(P2, plan) == F(1, 2) * 1 + F(1, 2) * 1


def test_rotation_costs_two():
    plan = rotation_plan("sqrt2m1", 30)
    assert integral_cost(IND, plan) == 2
    assert sup_cost(IND, plan) == 2


def test_identity_sup_cost_one():
    assert sup_cost(IND, identity_plan(30)) == 1


def test_single_atom_sup_cost():
    t = ((F(1, 5),), (F(4, 5),))
    plan = DiscreteCoupling((UNIT, UNIT), ((t, F(1)),))
    assert sup_cost(P2, plan) == eval_cost(P2, t) == F(9, 25)


def test_infinite_cell_makes_integral_infinite():
    c = CostSpec.tensor([[0, "inf"], [1, 0]], points=[[0, 1], [0, 1]])
    plan = DiscreteCoupling((UNIT, UNIT), ((((0,), (1,)), F(1, 2)), (((1,), (0,)), F(1, 2))))
    assert integral_cost(c, plan) == INF
    assert objective_value(c, plan, "max") == INF


def test_envelope():
    assert continuity_envelope(CostSpec.tensor([[0, 1], [1, 0]]), [UNIT, UNIT], 0.5) is None
    assert continuity_envelope(IND, [UNIT, UNIT], 0.5) is None
    assert continuity_envelope(CostSpec.equality_indicator(2, 2), [UNIT, UNIT], 0.5) == 0
    # |d^2 - d'^2| <= 2 * dmax * |d - d'| with |d - d'| < delta
    assert continuity_envelope(P2, [UNIT, UNIT], 0.25) == pytest.approx(2 * 1 * 0.25)


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.integers(1, 10), st.sampled_from([1, 2, 3]))
def test_integral_at_most_sup(seed, n, p):
    plan = random_plan(np.random.default_rng(seed), n)
    c = CostSpec.power_distance(p)
    assert integral_cost(c, plan) <= sup_cost(c, plan)


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.integers(1, 10))
def test_sup_cost_ignores_weights(seed, n):
    rng = np.random.default_rng(seed)
    plan = random_plan(rng, n)
    w = rng.integers(1, 20, n)
    reweighted = DiscreteCoupling(plan.spaces, tuple((t, F(int(x), int(w.sum())))
                                                     for t, x in zip(plan.support, w)))
    for c in (P2, IND, CostSpec.power_distance(1)):
        assert sup_cost(c, plan) == sup_cost(c, reweighted)


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.integers(1, 8), st.integers(1, 8),
       st.fractions(0, 1))
def test_integral_cost_is_linear(seed, na, nb, t):
    rng = np.random.default_rng(seed)
    a, b = random_plan(rng, na, den=5), random_plan(rng, nb, den=5)
    if t in (0, 1):
        return
    assert integral_cost(P2, mixture(a, b, t)) == t * integral_cost(P2, a) + (1 - t) * integral_cost(P2, b)
