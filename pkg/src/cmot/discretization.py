"""Dyadic partitions of the marginal boxes and the plans built on them.

At level ``n`` each factor box is cut into ``2**r`` equal slabs per axis,
``r`` being the least integer with cell diameter ``< delta_n / 2``; only
cells holding at least one atom are kept. Cells are half-open except on the
upper face of the box.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional, Sequence

from .costs import CostSpec, continuity_envelope, objective_value
from .measures import (FLOAT, RATIONAL, DiscreteCoupling, DiscreteMeasure, FactorSpace,
                       bl_discrepancy, marginal)


def product_diameter(spaces: Sequence[FactorSpace]) -> float:
    """Diameter of the product box in the max-over-factors metric."""
    return max(s.diameter for s in spaces)


def default_schedule(spaces: Sequence[FactorSpace]) -> Callable[[int], float]:
    diam = product_diameter(spaces)
    return lambda n: diam * 2.0 ** (-n)


def _halvings(space: FactorSpace, delta: float) -> int:
    r = 0
    while space.diameter / 2 ** r >= delta / 2:
        r += 1
    return r


@dataclass(frozen=True)
class Cell:
    id: int
    index: tuple
    lo: tuple
    hi: tuple

    def center(self) -> tuple:
        return tuple((a + b) / 2 for a, b in zip(self.lo, self.hi))


@dataclass(frozen=True)
class Partition:
    """Per-marginal retained dyadic cells at one level.

    ``nesting[k]`` maps each cell id of marginal ``k`` to the grid index of
    the level ``n-1`` cell containing it.
    """

    spaces: tuple
    level: int
    delta: float
    halvings: tuple
    cells: tuple
    nesting: tuple

    def grid_index(self, k: int, point) -> tuple:
        space, r = self.spaces[k], self.halvings[k]
        return _grid_index(space, r, point)

    def cell_of(self, k: int, point) -> Cell:
        idx = self.grid_index(k, point)
        for cell in self.cells[k]:
            if cell.index == idx:
                return cell
        raise ValueError(f"point {point} of marginal {k} lies in no retained cell")

    def cell_ids(self, tup) -> tuple:
        return tuple(self.cell_of(k, p).id for k, p in enumerate(tup))

    def cell(self, k: int, cid: int) -> Cell:
        return self.cells[k][cid]


def _grid_index(space: FactorSpace, r: int, point) -> tuple:
    n = 2 ** r
    idx = []
    for x, (lo, hi) in zip(point, space.bounds):
        if not lo <= x <= hi:
            raise ValueError(f"point {point} outside {space.bounds}")
        if isinstance(x, float) or isinstance(lo, float) or isinstance(hi, float):
            i = math.floor((x - lo) * n / (hi - lo))
        else:
            i = math.floor(Fraction(x - lo) * n / Fraction(hi - lo))
        idx.append(min(i, n - 1))
    return tuple(idx)


def _box(space: FactorSpace, r: int, index: tuple):
    n = 2 ** r
    lo, hi = [], []
    for i, (a, b) in zip(index, space.bounds):
        exact = not (isinstance(a, float) or isinstance(b, float))
        h = Fraction(b - a) / n if exact else (b - a) / n
        lo.append(a + i * h)
        hi.append(a + (i + 1) * h)
    return tuple(lo), tuple(hi)


def build_partition(spaces: Sequence[FactorSpace], supports: Sequence, n: int,
                    delta_schedule: Optional[Callable[[int], float]] = None) -> Partition:
    """Level-``n`` dyadic partition of each factor box, trimmed to cells with atoms.

    ``supports[k]`` is a sequence of points or a :class:`DiscreteMeasure`.
    The default schedule is ``delta_n = 2**-n * diam(K)``.
    """
    spaces = tuple(spaces)
    if n < 1:
        raise ValueError("levels start at 1")
    schedule = delta_schedule or default_schedule(spaces)
    delta, prev = schedule(n), schedule(n - 1)
    if not delta < prev:
        raise ValueError("delta schedule must be strictly decreasing")
    halvings, all_cells, nesting = [], [], []
    for k, (space, supp) in enumerate(zip(spaces, supports)):
        pts = supp.points if isinstance(supp, DiscreteMeasure) else list(supp)
        if not pts:
            raise ValueError(f"marginal {k} has empty support")
        r, r0 = _halvings(space, delta), _halvings(space, prev)
        indices = sorted({_grid_index(space, r, p) for p in pts})
        cells = tuple(Cell(i, idx, *_box(space, r, idx)) for i, idx in enumerate(indices))
        shift = r - r0
        nesting.append({c.id: tuple(j >> shift for j in c.index) for c in cells})
        halvings.append(r)
        all_cells.append(cells)
    return Partition(spaces, n, delta, tuple(halvings), tuple(all_cells), tuple(nesting))


def plan_partition(plan: DiscreteCoupling, n: int, delta_schedule=None) -> Partition:
    supports = [sorted({t[k] for t in plan.support}) for k in range(plan.n_marginals)]
    return build_partition(plan.spaces, supports, n, delta_schedule)


def _group_by_cell(plan: DiscreteCoupling, part: Partition) -> dict:
    groups: dict = {}
    for tup, w in plan.atoms:
        groups.setdefault(part.cell_ids(tup), []).append((tup, w))
    return groups


def _sup_distance(tup, center) -> float:
    return max(math.sqrt(sum((float(a) - float(b)) ** 2 for a, b in zip(p, c)))
               for p, c in zip(tup, center))


def discretize_plan(plan: DiscreteCoupling, part: Partition, rep_rule: str = "lex") -> DiscreteCoupling:
    """One atom per charged product cell, carrying the plan's mass of that cell.

    The atom sits at a support tuple of ``plan`` inside the cell: the
    lexicographically smallest (``"lex"``) or the one closest to the cell
    centre (``"centroid"``, ties broken lexicographically).
    """
    if rep_rule not in ("lex", "centroid"):
        raise ValueError(f"unknown representative rule {rep_rule!r}")
    atoms = []
    for ids, members in sorted(_group_by_cell(plan, part).items()):
        mass = sum((w for _, w in members), Fraction(0) if plan.mode == RATIONAL else 0.0)
        tuples = sorted(t for t, _ in members)
        if rep_rule == "lex":
            rep = tuples[0]
        else:
            center = tuple(part.cell(k, i).center() for k, i in enumerate(ids))
            rep = min(tuples, key=lambda t: (_sup_distance(t, center), t))
        atoms.append((rep, mass))
    if plan.mode == FLOAT:
        total = math.fsum(w for _, w in atoms)
        atoms = [(t, w / total) for t, w in atoms]
    return DiscreteCoupling(plan.spaces, tuple(atoms), plan.mode)


def cell_masses(measure: DiscreteMeasure, part: Partition, k: int) -> dict:
    """Mass of every retained cell of marginal ``k`` (cells without atoms omitted)."""
    out: dict = {}
    for p, w in measure.atoms:
        cid = part.cell_of(k, p).id
        out[cid] = out.get(cid, 0) + w
    return out


def recovery_sequence(beta: DiscreteCoupling, part: Partition, targets: Sequence[DiscreteMeasure]
                      ) -> DiscreteCoupling:
    """Glue the cell masses of ``beta`` onto the discretized marginals ``targets``.

    Every product cell ``Q`` charged by ``beta`` receives
    ``beta(Q) * prod_k targets[k]|B_k / targets[k](B_k)``, so the result has
    exactly the marginals ``targets``.
    """
    if len(targets) != beta.n_marginals:
        raise ValueError("one target marginal per factor is required")
    if any(t.mode != beta.mode for t in targets):
        raise ValueError("targets and beta use different weight modes")
    target_mass = [cell_masses(t, part, k) for k, t in enumerate(targets)]
    for k in range(beta.n_marginals):
        mine = cell_masses(marginal(beta, k), part, k)
        for cid, w in mine.items():
            ref = target_mass[k].get(cid, 0)
            if ref == 0:
                raise ValueError(f"cell {cid} of marginal {k} is charged by beta but empty in the target")
            if beta.mode == RATIONAL and w != ref or beta.mode == FLOAT and abs(w - ref) > 1e-12:
                raise ValueError(f"cell {cid} of marginal {k}: beta mass {w} != target mass {ref}")
    restricted = []
    for k, t in enumerate(targets):
        per_cell: dict = {}
        for p, w in t.atoms:
            per_cell.setdefault(part.cell_of(k, p).id, []).append((p, w))
        restricted.append(per_cell)
    pairs = []
    for ids, members in sorted(_group_by_cell(beta, part).items()):
        mass = sum(w for _, w in members)
        partial = [((), mass)]
        for k, cid in enumerate(ids):
            norm = target_mass[k][cid]
            partial = [(tup + (p,), w * v / norm) for tup, w in partial for p, v in restricted[k][cid]]
        pairs.extend(partial)
    if beta.mode == FLOAT:
        total = math.fsum(w for _, w in pairs)
        pairs = [(t, w / total) for t, w in pairs]
    return DiscreteCoupling.from_pairs(beta.spaces, pairs, beta.mode)


@dataclass(frozen=True)
class ConvergenceRow:
    level: int
    delta: float
    discrepancy: float
    objective: object
    envelope: Optional[float]


def convergence_report(plan: DiscreteCoupling, cost: CostSpec, objective: str, levels: Sequence[int],
                       delta_schedule=None, dict_size: int = 8, rep_rule: str = "lex") -> list:
    """Discrepancy and objective of the discretized plan, level by level.

    ``envelope`` bounds ``|objective(alpha_n) - objective(plan)|`` through the
    modulus of continuity of the cost on cells of size ``delta_n / 2``; it is
    ``None`` for costs without one.
    """
    if not levels:
        raise ValueError("levels must be nonempty")
    rows = []
    for n in levels:
        part = plan_partition(plan, n, delta_schedule)
        alpha = discretize_plan(plan, part, rep_rule)
        rows.append(ConvergenceRow(n, part.delta, bl_discrepancy(alpha, plan, dict_size),
                                   objective_value(cost, alpha, objective),
                                   continuity_envelope(cost, plan.spaces, part.delta)))
    return rows
