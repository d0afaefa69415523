"""Cost functions and the two objectives on discrete plans.

``integral_cost`` is the linear objective ``sum_z gamma(z) c(z)`` and
``sup_cost`` is the maximum of ``c`` over the support of the plan.
Costs stay exact (``Fraction``) whenever the inputs allow it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from math import isqrt
from typing import Optional

import numpy as np

from .measures import MERGE_TOL, RATIONAL, DiscreteCoupling

INF = math.inf

POWER_DISTANCE = "power_distance"
SQUARED_SUM_BARYCENTER = "squared_sum_barycenter"
EQUALITY_INDICATOR = "equality_indicator"
TENSOR = "tensor"
KINDS = (POWER_DISTANCE, SQUARED_SUM_BARYCENTER, EQUALITY_INDICATOR, TENSOR)


@dataclass(frozen=True)
class CostSpec:
    """Declarative cost ``c(x^1, ..., x^N)``.

    Use the constructors :meth:`power_distance`, :meth:`squared_sum_barycenter`,
    :meth:`equality_indicator` and :meth:`tensor` rather than the raw fields.
    """

    kind: str
    n_marginals: int = 2
    p: Optional[Fraction] = None
    equal_value: Optional[Fraction] = None
    unequal_value: Optional[Fraction] = None
    values: Optional[np.ndarray] = field(default=None, compare=False)
    points: Optional[tuple] = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown cost kind {self.kind!r}")
        if self.n_marginals < 2:
            raise ValueError("costs need N >= 2")
        if self.kind in (POWER_DISTANCE, EQUALITY_INDICATOR) and self.n_marginals != 2:
            raise ValueError(f"{self.kind} is a two-marginal cost")
        if self.kind == POWER_DISTANCE and not self.p > 0:
            raise ValueError("power must be positive")
        if self.kind == EQUALITY_INDICATOR and self.equal_value > self.unequal_value:
            raise ValueError("equal_value must not exceed unequal_value")
        if self.kind == TENSOR:
            if self.values.ndim != self.n_marginals:
                raise ValueError("tensor rank must equal the number of marginals")
            for v in self.values.flat:
                if v != v or v == -INF:
                    raise ValueError("tensor entries must be finite or +inf")
            if self.points is not None and tuple(len(p) for p in self.points) != self.values.shape:
                raise ValueError("tensor points do not match its shape")

    @classmethod
    def power_distance(cls, p=2) -> "CostSpec":
        """``|x - y|^p`` for two marginals."""
        return cls(POWER_DISTANCE, 2, p=_exact(p))

    @classmethod
    def squared_sum_barycenter(cls, n_marginals: int) -> "CostSpec":
        """``sum_{i<j} |x^i - x^j|^2``."""
        return cls(SQUARED_SUM_BARYCENTER, n_marginals)

    @classmethod
    def equality_indicator(cls, equal_value=1, unequal_value=2) -> "CostSpec":
        """``equal_value`` on the diagonal ``x = y`` and ``unequal_value`` off it."""
        return cls(EQUALITY_INDICATOR, 2, equal_value=_exact(equal_value),
                   unequal_value=_exact(unequal_value))

    @classmethod
    def tensor(cls, values, points=None) -> "CostSpec":
        """Explicit cost table indexed by per-marginal atom indices.

        ``points[k]`` lists the points of marginal ``k`` in index order and
        lets :func:`eval_cost` accept points instead of indices.
        """
        arr = np.empty(np.shape(values), dtype=object)
        for idx in np.ndindex(arr.shape):
            arr[idx] = _exact(np.asarray(values, dtype=object)[idx])
        if points is not None:
            points = tuple(tuple(tuple(p) if np.ndim(p) else (p,) for p in pts) for pts in points)
        return cls(TENSOR, arr.ndim, values=arr, points=points)

    def index_of(self, k: int, point) -> int:
        if self.points is None:
            raise ValueError("tensor cost carries no points; pass indices")
        try:
            return self.points[k].index(tuple(point))
        except ValueError:
            raise IndexError(f"point {point} is not a declared atom of marginal {k}") from None


def _exact(v):
    if isinstance(v, str) and v.strip().lower() in ("inf", "+inf", "infinity"):
        return INF
    if isinstance(v, float):
        if math.isinf(v):
            return INF
        return Fraction(v) if v.is_integer() else v
    return Fraction(v)


def _sq_dist(x, y):
    if len(x) != len(y):
        raise ValueError(f"dimension mismatch: {len(x)} vs {len(y)}")
    return sum((a - b) * (a - b) for a, b in zip(x, y))


def _exact_sqrt(s):
    """Square root, exact when ``s`` is the square of a rational."""
    if isinstance(s, Fraction) or isinstance(s, int):
        s = Fraction(s)
        rn, rd = isqrt(s.numerator), isqrt(s.denominator)
        if rn * rn == s.numerator and rd * rd == s.denominator:
            return Fraction(rn, rd)
    return math.sqrt(s)


def _power(d, p):
    if isinstance(p, Fraction) and p.denominator == 1 and not isinstance(d, float):
        return d ** int(p)
    return float(d) ** float(p)


def _distance_power(x, y, p):
    s = _sq_dist(x, y)
    if isinstance(p, Fraction) and p.denominator == 1 and p.numerator % 2 == 0:
        return s ** (p.numerator // 2)
    return _power(_exact_sqrt(s), p)


def _is_exact(point) -> bool:
    return all(isinstance(v, (Fraction, int)) for v in point)


def eval_cost(c: CostSpec, tup):
    """Evaluate ``c`` at one support tuple (a sequence of ``N`` points).

    For tensor costs the tuple may hold integer atom indices or the points
    declared in ``c.points``.
    """
    if len(tup) != c.n_marginals:
        raise ValueError(f"expected {c.n_marginals} points, got {len(tup)}")
    if c.kind == TENSOR:
        idx = []
        for k, p in enumerate(tup):
            i = p if isinstance(p, (int, np.integer)) else c.index_of(k, p)
            if not 0 <= i < c.values.shape[k]:
                raise IndexError(f"tensor index {i} out of range on axis {k}")
            idx.append(i)
        return c.values[tuple(idx)]
    if c.kind == POWER_DISTANCE:
        return _distance_power(tup[0], tup[1], c.p)
    if c.kind == SQUARED_SUM_BARYCENTER:
        dims = {len(p) for p in tup}
        if len(dims) != 1:
            raise ValueError("all points must share one dimension")
        n = len(tup)
        return sum((_sq_dist(tup[i], tup[j]) for i in range(n) for j in range(i + 1, n)), 0)
    x, y = tup
    if len(x) != len(y):
        raise ValueError(f"dimension mismatch: {len(x)} vs {len(y)}")
    if _is_exact(x) and _is_exact(y):
        same = x == y
    else:
        same = all(abs(a - b) <= MERGE_TOL for a, b in zip(x, y))
    return c.equal_value if same else c.unequal_value


def _check_arity(c: CostSpec, plan: DiscreteCoupling):
    if c.n_marginals != plan.n_marginals:
        raise ValueError(f"cost has N={c.n_marginals}, plan has N={plan.n_marginals}")


def integral_cost(c: CostSpec, plan: DiscreteCoupling):
    """``sum_z plan(z) c(z)``; ``inf`` as soon as a charged tuple costs ``inf``."""
    _check_arity(c, plan)
    terms = []
    for tup, w in plan.atoms:
        v = eval_cost(c, tup)
        if v == INF:
            return INF
        terms.append((w, v))
    if plan.mode == RATIONAL and not any(isinstance(v, float) for _, v in terms):
        return sum((w * v for w, v in terms), Fraction(0))
    # fsum keeps the float total independent of atom order
    return math.fsum(float(w) * float(v) for w, v in terms)


def sup_cost(c: CostSpec, plan: DiscreteCoupling):
    """Maximum of ``c`` over the support of ``plan``."""
    _check_arity(c, plan)
    return max(eval_cost(c, tup) for tup, _ in plan.atoms)


def objective_value(c: CostSpec, plan: DiscreteCoupling, objective: str):
    """Dispatch on ``objective`` in ``{"sum", "max"}``."""
    if objective == "sum":
        return integral_cost(c, plan)
    if objective == "max":
        return sup_cost(c, plan)
    raise ValueError(f"objective must be 'sum' or 'max', got {objective!r}")


def continuity_envelope(c: CostSpec, spaces, delta: float) -> Optional[float]:
    """Bound on ``|c(u) - c(z)|`` when every factor of ``u`` and ``z`` differs by < ``delta/2``.

    Returns ``None`` for costs with no modulus of continuity (tensors and a
    non-constant equality indicator).
    """
    h = delta / 2
    if c.kind == TENSOR:
        return None
    if c.kind == EQUALITY_INDICATOR:
        return 0.0 if c.equal_value == c.unequal_value else None
    # largest distance between points of two factor boxes
    def span(s, t):
        return math.sqrt(sum(max(float(hi1) - float(lo2), float(hi2) - float(lo1)) ** 2
                             for (lo1, hi1), (lo2, hi2) in zip(s.bounds, t.bounds)))
    if c.kind == POWER_DISTANCE:
        p = float(c.p)
        dmax = span(spaces[0], spaces[1])
        if p >= 1:
            return p * dmax ** (p - 1) * 2 * h
        return (2 * h) ** p
    n = len(spaces)
    bound = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            bound += 2 * span(spaces[i], spaces[j]) * 2 * h
    return bound
