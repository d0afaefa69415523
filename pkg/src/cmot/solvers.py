"""Exact discrete multi-marginal transport solvers.

The transport polytope is materialized with one variable per product cell.
In rational mode every solver is exact; in float mode the LPs go through
HiGHS with ``1e-9`` tolerances.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import networkx as nx

from ._simplex import exact_lexicographic_lp, float_lexicographic_lp
from .costs import INF, TENSOR, CostSpec, eval_cost, objective_value
from .measures import (FLOAT, RATIONAL, DiscreteCoupling, DiscreteMeasure, ModeError, marginal,
                       product_coupling)

DEFAULT_MAX_CELLS = 10_000
FLOAT_TOL = 1e-9


class GuardExceeded(RuntimeError):
    """An instance is larger than the configured resource guard allows."""


@dataclass(frozen=True)
class MotInstance:
    marginals: tuple
    cost: CostSpec
    objective: str = "sum"

    def __post_init__(self):
        marginals = tuple(self.marginals)
        object.__setattr__(self, "marginals", marginals)
        if len(marginals) != self.cost.n_marginals:
            raise ValueError(f"{len(marginals)} marginals for a cost with N={self.cost.n_marginals}")
        if self.objective not in ("sum", "max"):
            raise ValueError(f"objective must be 'sum' or 'max', got {self.objective!r}")
        if len({m.mode for m in marginals}) != 1:
            raise ModeError("marginals use different weight modes")
        c = self.cost
        if c.kind == TENSOR and c.points is None:
            # index-only tensor: atom i of marginal k is axis-k index i
            if c.values.shape != tuple(len(m) for m in marginals):
                raise ValueError(f"tensor shape {c.values.shape} does not match the marginals")
            object.__setattr__(self, "cost", CostSpec.tensor(c.values, [m.points for m in marginals]))

    @property
    def mode(self) -> str:
        return self.marginals[0].mode

    @property
    def n_cells(self) -> int:
        return math.prod(len(m) for m in self.marginals)


@dataclass(frozen=True)
class Solution:
    plan: Optional[DiscreteCoupling]
    value: object
    status: str = "optimal"


def _guard(inst: MotInstance, max_cells: int):
    if inst.n_cells > max_cells:
        raise GuardExceeded(f"product support has {inst.n_cells} cells, guard is {max_cells}")


def _cells(inst: MotInstance):
    """All product cells as index tuples, with their cost values."""
    points = [m.points for m in inst.marginals]
    cells = list(itertools.product(*(range(len(m)) for m in inst.marginals)))
    costs = [eval_cost(inst.cost, tuple(points[k][i] for k, i in enumerate(z))) for z in cells]
    return cells, costs


def _constraints(inst: MotInstance, cells):
    """Marginal equality rows; the last row of every marginal but the first is dropped."""
    A, b = [], []
    for k, m in enumerate(inst.marginals):
        last = len(m) if k == 0 else len(m) - 1
        for i in range(last):
            A.append([1 if z[k] == i else 0 for z in cells])
            b.append(m.weights[i])
    return A, b


def _plan_from(inst: MotInstance, cells, x) -> DiscreteCoupling:
    points = [m.points for m in inst.marginals]
    spaces = tuple(m.space for m in inst.marginals)
    if inst.mode == RATIONAL:
        pairs = [(tuple(points[k][i] for k, i in enumerate(z)), w) for z, w in zip(cells, x) if w > 0]
        return DiscreteCoupling(spaces, tuple(pairs), RATIONAL)
    keep = [(z, float(w)) for z, w in zip(cells, x) if w > 1e-12]
    total = math.fsum(w for _, w in keep)
    pairs = [(tuple(points[k][i] for k, i in enumerate(z)), w / total) for z, w in keep]
    return DiscreteCoupling(spaces, tuple(pairs), FLOAT)


def _solve_lp(inst, cells, objectives):
    A, b = _constraints(inst, cells)
    if inst.mode == RATIONAL:
        objectives = [[v if not isinstance(v, float) else Fraction(v) for v in c] for c in objectives]
        return exact_lexicographic_lp(A, b, objectives)
    return float_lexicographic_lp(A, [float(v) for v in b], objectives, FLOAT_TOL)


def _check_masses(inst: MotInstance):
    totals = [sum(m.weights) for m in inst.marginals]
    if inst.mode == RATIONAL:
        if len(set(totals)) != 1:
            raise ValueError(f"marginal masses differ: {totals}")
    elif max(totals) - min(totals) > FLOAT_TOL:
        raise ValueError(f"marginal masses differ: {totals}")


def solve_integral_mot(inst: MotInstance, max_cells: int = DEFAULT_MAX_CELLS) -> Solution:
    """Minimize ``sum_z gamma(z) c(z)`` over the multi-marginal transport polytope."""
    if inst.objective != "sum":
        raise ValueError("solve_integral_mot needs objective='sum'")
    _guard(inst, max_cells)
    _check_masses(inst)
    cells, costs = _cells(inst)
    finite = [i for i, v in enumerate(costs) if v != INF]
    sub = [cells[i] for i in finite]
    x = _solve_lp(inst, sub, [[costs[i] for i in finite]]) if sub else None
    if x is None:
        # every coupling charges an infinite-cost cell
        plan = product_coupling(inst.marginals)
        return Solution(plan, INF)
    plan = _plan_from(inst, sub, x)
    return Solution(plan, objective_value(inst.cost, plan, "sum"))


def _flow_witness(inst: MotInstance, cells, allowed) -> Optional[list]:
    mu, nu = inst.marginals
    G = nx.DiGraph()
    for i, w in enumerate(mu.weights):
        G.add_edge("s", ("a", i), capacity=w)
    for j, w in enumerate(nu.weights):
        G.add_edge(("b", j), "t", capacity=w)
    one = Fraction(1) if inst.mode == RATIONAL else 1.0
    for z, ok in zip(cells, allowed):
        if ok:
            G.add_edge(("a", z[0]), ("b", z[1]), capacity=one)
    if not G.has_node("s") or not G.has_node("t"):
        return None
    value, flow = nx.maximum_flow(G, "s", "t", flow_func=nx.algorithms.flow.edmonds_karp)
    total = sum(mu.weights)
    if inst.mode == RATIONAL:
        if value != total:
            return None
    elif abs(value - total) > FLOAT_TOL:
        return None
    return [flow[("a", z[0])].get(("b", z[1]), 0) if ok else 0 for z, ok in zip(cells, allowed)]


def _feasible(inst: MotInstance, cells, costs, t) -> Optional[list]:
    allowed = [v <= t for v in costs]
    if not any(allowed):
        return None
    if inst.cost.n_marginals == 2:
        return _flow_witness(inst, cells, allowed)
    idx = [i for i, ok in enumerate(allowed) if ok]
    x = _solve_lp(inst, [cells[i] for i in idx], [])
    if x is None:
        return None
    full = [0] * len(cells)
    for i, v in zip(idx, x):
        full[i] = v
    return full


def feasibility_at_level(inst: MotInstance, t, max_cells: int = DEFAULT_MAX_CELLS
                         ) -> Optional[DiscreteCoupling]:
    """A coupling supported in ``{c <= t}``, or ``None`` if there is none.

    Two marginals are decided by max-flow (full saturation is Hall's
    condition); more marginals use an LP phase-one on the restricted cells.
    """
    _guard(inst, max_cells)
    _check_masses(inst)
    cells, costs = _cells(inst)
    x = _feasible(inst, cells, costs, t)
    return None if x is None else _plan_from(inst, cells, x)


def _levels(costs) -> list:
    return sorted(set(costs))


def solve_sup_mot(inst: MotInstance, max_cells: int = DEFAULT_MAX_CELLS,
                  refine: bool = True) -> Solution:
    """Minimize the largest cost charged by a coupling.

    Bisects the sorted distinct cost values for the least feasible level
    ``t``. With ``refine`` the returned plan additionally minimizes, level by
    level from ``t`` downwards, the mass sitting at each cost value; such a
    plan cannot be improved by any finite cyclic reassignment of its support.
    """
    if inst.objective != "max":
        raise ValueError("solve_sup_mot needs objective='max'")
    _guard(inst, max_cells)
    _check_masses(inst)
    cells, costs = _cells(inst)
    levels = _levels(costs)
    lo, hi = 0, len(levels) - 1
    witness = _feasible(inst, cells, costs, levels[hi])
    while lo < hi:
        mid = (lo + hi) // 2
        x = _feasible(inst, cells, costs, levels[mid])
        if x is None:
            lo = mid + 1
        else:
            hi, witness = mid, x
    t = levels[hi]
    if refine and len({v for v in costs if v <= t}) > 1:
        idx = [i for i, v in enumerate(costs) if v <= t]
        sub_levels = sorted({costs[i] for i in idx}, reverse=True)
        objectives = [[1 if costs[i] == v else 0 for i in idx] for v in sub_levels[:-1]]
        x = _solve_lp(inst, [cells[i] for i in idx], objectives)
        full = [0] * len(cells)
        for i, v in zip(idx, x):
            full[i] = v
        witness = full
    plan = _plan_from(inst, cells, witness)
    return Solution(plan, objective_value(inst.cost, plan, "max"))


def solve(inst: MotInstance, max_cells: int = DEFAULT_MAX_CELLS) -> Solution:
    if inst.objective == "sum":
        return solve_integral_mot(inst, max_cells)
    return solve_sup_mot(inst, max_cells)


def brute_force_oracle(inst: MotInstance) -> Solution:
    """Best permutation plan by enumeration, for validating the LP solvers.

    Needs two uniform marginals with the same number ``m <= 7`` of atoms;
    by Birkhoff's theorem the best permutation is optimal among all couplings.
    """
    if len(inst.marginals) != 2:
        raise ValueError("the oracle handles two marginals only")
    mu, nu = inst.marginals
    m = len(mu)
    if len(nu) != m or m > 7:
        raise ValueError("the oracle needs equal atom counts m <= 7")
    if len(set(mu.weights) | set(nu.weights)) != 1:
        raise ValueError("the oracle needs uniform weights")
    best = None
    spaces = (mu.space, nu.space)
    w = mu.weights[0]
    for perm in itertools.permutations(range(m)):
        plan = DiscreteCoupling(spaces, tuple(((mu.points[i], nu.points[perm[i]]), w)
                                              for i in range(m)), inst.mode)
        v = objective_value(inst.cost, plan, inst.objective)
        if best is None or v < best.value:
            best = Solution(plan, v)
    return best


def is_coupling_of(plan: DiscreteCoupling, measures: Sequence[DiscreteMeasure]) -> bool:
    """Marginal check, exact in rational mode."""
    if plan.n_marginals != len(measures):
        return False
    for k, m in enumerate(measures):
        got = marginal(plan, k)
        if plan.mode == RATIONAL and m.mode == RATIONAL:
            if got.merged() != m.merged():
                return False
        else:
            ref = m.merged()
            mine = got.merged()
            if len(ref) != len(mine):
                return False
            for p, w in ref.items():
                q = min(mine, key=lambda x: max(abs(float(a) - float(b)) for a, b in zip(x, p)))
                if abs(float(mine[q]) - float(w)) > FLOAT_TOL:
                    return False
    return True


__all__ = ["MotInstance", "Solution", "GuardExceeded", "solve_integral_mot", "solve_sup_mot",
           "feasibility_at_level", "brute_force_oracle", "solve", "is_coupling_of"]
