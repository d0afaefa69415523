import itertools
import math
from collections import Counter
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cmot.costs import CostSpec, eval_cost
from cmot.experiments import rotation_plan
from cmot.measures import FLOAT, DiscreteCoupling, marginals, same_marginals
from cmot.monotonicity import (Certificate, IntegerTable, apply_permutations, check_cm,
                               check_finite_optimality, check_icm, expand_to_table,
                               find_permutations, marginal_matrix, rational_kernel,
                               rationalize_pair, verify_certificate)
from cmot.solvers import GuardExceeded, MotInstance, solve

from conftest import UNIT, grid_points, random_plan, uniform_measure

P2 = CostSpec.power_distance(2)
IND = CostSpec.equality_indicator(1, 2)


def pts(*pairs):
    return [tuple((F(v),) for v in p) for p in pairs]


def test_monotone_pairing_has_no_certificate():
    assert check_cm(pts((0, 0), (1, 1)), P2, 2) is None


def test_crossed_pairing_certificate():
    cert = check_cm(pts((0, 1), (1, 0)), P2, 2)
    # swap arithmetic: before 1 + 1, after 0 + 0
    assert cert.k == 2 and cert.before == 2 and cert.after == 0
    assert cert.permutations == ((1, 0),)
    assert verify_certificate(cert, P2, pts((0, 1), (1, 0)))


def test_single_tuple_support():
    assert check_cm(pts((0, 1)), P2, 4) is None
    assert check_icm(pts((0, 1)), IND, 4) is None


def test_irrational_rotation_is_icm():
    plan = rotation_plan("sqrt2m1", 30)
    assert check_icm(plan.support, IND, 4) is None


def test_rational_rotation_closes_three_cycle():
    plan = rotation_plan("1/3", 30)
    cert = check_icm(plan.support, IND, 3)
    assert cert is not None
    assert cert.k == 3 and cert.before == 2 and cert.after == 1
    assert all(x == y for x, y in cert.reassigned())
    assert verify_certificate(cert, IND, plan.support)


def test_tampered_certificate_fails_verification():
    cert = check_cm(pts((0, 1), (1, 0)), P2, 2)
    bad = Certificate(cert.tuples, cert.permutations, cert.before, F(1, 2), "sum")
    assert not verify_certificate(bad, P2)
    ident = Certificate(cert.tuples, ((0, 1),), cert.before, cert.before, "sum")
    assert not verify_certificate(ident, P2)


def test_search_guards():
    support = pts(*[(i, i) for i in range(61)])
    with pytest.raises(GuardExceeded):
        check_cm([tuple((F(i, 100),) for _ in range(2)) for i in range(61)], P2, 2)
    with pytest.raises(GuardExceeded):
        check_cm(support[:10], P2, 6)
    with pytest.raises(GuardExceeded):
        check_cm(support[:50], P2, 5, max_evals=1000)
    with pytest.raises(ValueError):
        check_cm(support[:3], P2, 1)


def test_first_violation_is_deterministic():
    support = pts((0, 1), (1, 0), (F(1, 2), 0), (0, F(1, 2)))
    first = check_cm(support, P2, 3)
    assert first == check_cm(support, P2, 3)
    assert first.k == 2


def test_expand_examples():
    x, y, u_, v = (F(0),), (F(1),), (F(2),), (F(3),)
    table = expand_to_table([((x, y), 2), ((u_, v), 1)])
    assert table.rows == ((x, y), (x, y), (u_, v))
    assert len(expand_to_table([((x, y), 1)])) == 1
    t = expand_to_table([((x, y), 3), ((u_, v), 2)])
    assert len(t) == 5 and len(set(t.rows[:3])) == 1
    with pytest.raises(ValueError):
        expand_to_table([((x, y), F(1, 2))])


def test_expand_scaled_coupling():
    plan = DiscreteCoupling((UNIT, UNIT), ((((0,), (0,)), F(2, 3)), (((1,), (1,)), F(1, 3))))
    assert len(expand_to_table(plan, scale=3)) == 3


def test_find_permutations_examples():
    x1, x2, y1, y2 = (F(0),), (F(1),), (F(2),), (F(3),)
    A = IntegerTable(((x1, y1), (x2, y2)), (0, 1))
    assert find_permutations(A, A) == [(0, 1)]
    B = IntegerTable(((x1, y2), (x2, y1)), (0, 1))
    perms = find_permutations(A, B)
    assert perms == [(1, 0)]
    assert sorted(apply_permutations(A, perms)) == sorted(B.rows)
    C = IntegerTable(((x1, y1), (x1, y2)), (0, 1))
    assert find_permutations(A, C) is None


def test_rationalize_rational_input_unchanged(rng):
    a = random_plan(rng, 4)
    assert rationalize_pair(a, a, F(1, 100)) == (a, a)


def _diag_pair(t):
    atoms = ((((0.0,), (0.0,)), t), (((1.0,), (1.0,)), 1 - t))
    a = DiscreteCoupling((UNIT, UNIT), atoms, FLOAT)
    return a, a


def test_rationalize_inverse_pi():
    t = 1 / math.pi
    a, b = _diag_pair(t)
    # kernel of the stacked marginal constraints: equal weights on matching atoms
    M = marginal_matrix(a, b)
    basis, free = rational_kernel(M)
    for v in basis:
        assert all(sum(F(r) * x for r, x in zip(row, v)) == 0 for row in M)
    for eps in (F(1, 10), F(1, 1000), F(1, 10 ** 6)):
        qa, qb = rationalize_pair(a, b, eps)
        q = qa.weights[0]
        assert isinstance(q, F) and abs(q - F(t)) < eps
        assert qa.weights == qb.weights
        assert sum(qa.weights) == 1


def test_rationalize_loose_eps(rng):
    a, b = _diag_pair(0.3)
    qa, qb = rationalize_pair(a, b, 1)
    assert all(w > 0 for w in qa.weights + qb.weights)


def test_rationalize_rejects_unequal_marginals():
    a, _ = _diag_pair(0.3)
    b, _ = _diag_pair(0.4)
    with pytest.raises(ValueError):
        rationalize_pair(a, b, F(1, 100))


def test_audit_on_exact_optimum(rng):
    mu = uniform_measure(grid_points(rng, 5, den=10))
    nu = uniform_measure(grid_points(rng, 5, den=10))
    sol = solve(MotInstance((mu, nu), P2, "sum"))
    rep = check_finite_optimality(sol.plan, P2, "sum", trials=30, l_max=4, seed=1)
    assert rep.passed and all(g == 0 for g in rep.gaps)


def test_audit_on_anti_monotone_pairing():
    plan = DiscreteCoupling((UNIT, UNIT), tuple((((F(i, 3),), (F(3 - i, 3),)), F(1, 4))
                                                for i in range(4)))
    rep = check_finite_optimality(plan, P2, "sum", trials=30, l_max=2, seed=0)
    assert not rep.passed and rep.max_gap > 0


def test_audit_on_rotation_plan():
    plan = rotation_plan("sqrt2m1", 30)
    rep = check_finite_optimality(plan, IND, "max", trials=30, l_max=4, seed=5)
    assert rep.passed and all(g == 0 for g in rep.gaps)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.integers(1, 6), st.sampled_from(["sum", "max"]))
def test_certificates_recheck(seed, n, aggregate):
    rng = np.random.default_rng(seed)
    support = random_plan(rng, n, den=5).support
    check = check_cm if aggregate == "sum" else check_icm
    cert = check(support, P2, 3)
    if cert is not None:
        assert verify_certificate(cert, P2, support)
        assert any(p != tuple(range(cert.k)) for p in cert.permutations)


def _equal_marginal_pair(rng, n_marg):
    """Two integer-weight couplings with the same marginals and <= 6 rows."""
    rows = int(rng.integers(1, 7))
    cols = [[int(v) for v in rng.integers(0, 3, rows)] for _ in range(n_marg)]
    a = [tuple((F(cols[j][i]),) for j in range(n_marg)) for i in range(rows)]
    shuffled = [cols[0]] + [list(rng.permutation(c)) for c in cols[1:]]
    b = [tuple((F(shuffled[j][i]),) for j in range(n_marg)) for i in range(rows)]
    return list(Counter(a).items()), list(Counter(b).items())


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.sampled_from([2, 3]))
def test_permutations_rebuild_columns(seed, n_marg):
    rng = np.random.default_rng(seed)
    a, b = _equal_marginal_pair(rng, n_marg)
    A, B = expand_to_table(a), expand_to_table(b)
    perms = find_permutations(A, B)
    assert perms is not None
    rebuilt = apply_permutations(A, perms)
    assert Counter(rebuilt) == Counter(B.rows)
    for j in range(n_marg):
        assert Counter(r[j] for r in rebuilt) == Counter(r[j] for r in B.rows)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.sampled_from([F(1, 100), F(1, 10 ** 4)]))
def test_rationalized_pair_is_in_kernel(seed, eps):
    rng = np.random.default_rng(seed)
    a, b = _float_pair(rng)
    qa, qb = rationalize_pair(a, b, eps)
    M = marginal_matrix(qa, qb)
    q = qa.weights + qb.weights
    assert all(sum(F(r) * x for r, x in zip(row, q)) == 0 for row in M)
    assert same_marginals(qa, qb, 0)


def _float_pair(rng):
    """Float couplings on a 2x2 grid with equal marginals (a and its cross-shift)."""
    x = [(0.0,), (1.0,)]
    p = rng.dirichlet(np.ones(4)) * 0.8 + 0.05
    p = p / p.sum()
    s = float(min(p[0], p[3])) * float(rng.uniform(0.1, 0.9))
    q = [p[0] - s, p[1] + s, p[2] + s, p[3] - s]
    cells = [(x[0], x[0]), (x[0], x[1]), (x[1], x[0]), (x[1], x[1])]
    a = DiscreteCoupling((UNIT, UNIT), tuple(zip(cells, map(float, p))), FLOAT)
    b = DiscreteCoupling((UNIT, UNIT), tuple(zip(cells, map(float, q))), FLOAT)
    return a, b
