"""Finitely supported measures and couplings on products of Euclidean boxes.

Two weight modes are supported, chosen per object:

* ``"rational"`` -- weights and coordinates are :class:`fractions.Fraction`,
  all identities hold exactly;
* ``"float"`` -- weights and coordinates are Python floats, total mass is
  checked to within ``1e-12``.

Objects are immutable after construction.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational
from typing import Iterable, Sequence, Union

import numpy as np

Number = Union[Fraction, float, int]
Point = tuple

RATIONAL = "rational"
FLOAT = "float"
MODES = (RATIONAL, FLOAT)

MASS_TOL = 1e-12
MERGE_TOL = 1e-12


class ModeError(TypeError):
    """Raised when rational and float objects are combined."""


def _as_rational(x) -> Fraction:
    if isinstance(x, bool):
        raise TypeError("booleans are not numbers here")
    if isinstance(x, Rational):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x)
    raise TypeError(f"expected an exact rational, got {type(x).__name__}")


def _as_float(x) -> float:
    if isinstance(x, str):
        return float(Fraction(x))
    v = float(x)
    if not math.isfinite(v):
        raise ValueError(f"non-finite value {x!r}")
    return v


def coerce(x, mode: str):
    """Convert a scalar to the number type used by ``mode``."""
    if mode == RATIONAL:
        return _as_rational(x)
    if mode == FLOAT:
        return _as_float(x)
    raise ValueError(f"unknown mode {mode!r}")


def coerce_point(p, mode: str) -> Point:
    if np.ndim(p) == 0:
        p = (p,)
    return tuple(coerce(v, mode) for v in p)


def points_close(p: Point, q: Point, mode: str) -> bool:
    """Exact equality in rational mode, ``MERGE_TOL`` agreement in float mode."""
    if len(p) != len(q):
        return False
    if mode == RATIONAL:
        return p == q
    return all(abs(a - b) <= MERGE_TOL for a, b in zip(p, q))


@dataclass(frozen=True)
class FactorSpace:
    """An axis-aligned compact box ``prod_j [lo_j, hi_j]``."""

    bounds: tuple

    def __post_init__(self):
        bounds = tuple((lo, hi) for lo, hi in self.bounds)
        if not bounds:
            raise ValueError("a factor space needs at least one axis")
        for lo, hi in bounds:
            if not lo < hi:
                raise ValueError(f"empty or degenerate axis [{lo}, {hi}]")
        object.__setattr__(self, "bounds", bounds)

    @classmethod
    def interval(cls, lo=0, hi=1) -> "FactorSpace":
        return cls(((lo, hi),))

    @classmethod
    def cube(cls, dim: int, lo=0, hi=1) -> "FactorSpace":
        return cls(tuple((lo, hi) for _ in range(dim)))

    @property
    def dim(self) -> int:
        return len(self.bounds)

    @property
    def diameter(self) -> float:
        return math.sqrt(sum(float(hi - lo) ** 2 for lo, hi in self.bounds))

    def contains(self, point: Point) -> bool:
        if len(point) != self.dim:
            return False
        return all(lo <= x <= hi for x, (lo, hi) in zip(point, self.bounds))


def _check_mode(mode):
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")


def _check_total(weights, mode):
    total = sum(weights, Fraction(0) if mode == RATIONAL else 0.0)
    if mode == RATIONAL:
        if total != 1:
            raise ValueError(f"weights sum to {total}, not 1")
    elif abs(total - 1.0) > MASS_TOL:
        raise ValueError(f"weights sum to {total!r}, not 1 within {MASS_TOL}")


@dataclass(frozen=True)
class DiscreteMeasure:
    """A finitely supported probability measure on one factor space.

    ``atoms`` is a tuple of ``(point, weight)`` pairs with pairwise distinct
    points and strictly positive weights.
    """

    space: FactorSpace
    atoms: tuple
    mode: str = RATIONAL

    def __post_init__(self):
        _check_mode(self.mode)
        atoms = []
        seen = set()
        for point, w in self.atoms:
            point = coerce_point(point, self.mode)
            w = coerce(w, self.mode)
            if not w > 0:
                raise ValueError(f"non-positive weight {w} at {point}")
            if not self.space.contains(point):
                raise ValueError(f"point {point} outside {self.space.bounds}")
            if point in seen:
                raise ValueError(f"repeated atom {point}")
            seen.add(point)
            atoms.append((point, w))
        if not atoms:
            raise ValueError("a probability measure needs at least one atom")
        _check_total([w for _, w in atoms], self.mode)
        object.__setattr__(self, "atoms", tuple(atoms))

    @classmethod
    def uniform(cls, space, points, mode=RATIONAL) -> "DiscreteMeasure":
        w = Fraction(1, len(points)) if mode == RATIONAL else 1.0 / len(points)
        return cls(space, tuple((p, w) for p in points), mode)

    @property
    def points(self) -> list:
        return [p for p, _ in self.atoms]

    @property
    def weights(self) -> list:
        return [w for _, w in self.atoms]

    def __len__(self):
        return len(self.atoms)

    def mass(self, predicate) -> Number:
        """Total weight of the atoms whose point satisfies ``predicate``."""
        zero = Fraction(0) if self.mode == RATIONAL else 0.0
        return sum((w for p, w in self.atoms if predicate(p)), zero)

    def merged(self) -> dict:
        return dict(self.atoms)


@dataclass(frozen=True)
class DiscreteCoupling:
    """A finitely supported probability measure on ``X^1 x ... x X^N``.

    ``atoms`` is a tuple of ``(tuple_of_N_points, weight)`` pairs.
    """

    spaces: tuple
    atoms: tuple
    mode: str = RATIONAL

    def __post_init__(self):
        _check_mode(self.mode)
        spaces = tuple(self.spaces)
        if len(spaces) < 2:
            raise ValueError("a coupling needs at least two marginals")
        object.__setattr__(self, "spaces", spaces)
        atoms = []
        seen = set()
        for tup, w in self.atoms:
            if len(tup) != len(spaces):
                raise ValueError(f"tuple {tup} does not have {len(spaces)} components")
            tup = tuple(coerce_point(p, self.mode) for p in tup)
            w = coerce(w, self.mode)
            if not w > 0:
                raise ValueError(f"non-positive weight {w} at {tup}")
            for p, space in zip(tup, spaces):
                if not space.contains(p):
                    raise ValueError(f"point {p} outside {space.bounds}")
            if tup in seen:
                raise ValueError(f"repeated support tuple {tup}")
            seen.add(tup)
            atoms.append((tup, w))
        if not atoms:
            raise ValueError("a probability measure needs at least one atom")
        _check_total([w for _, w in atoms], self.mode)
        object.__setattr__(self, "atoms", tuple(atoms))

    @classmethod
    def from_pairs(cls, spaces, pairs: Iterable, mode=RATIONAL) -> "DiscreteCoupling":
        """Build a coupling, summing the weights of repeated tuples."""
        acc: dict = {}
        for tup, w in pairs:
            key = tuple(coerce_point(p, mode) for p in tup)
            acc[key] = acc.get(key, 0) + coerce(w, mode)
        return cls(tuple(spaces), tuple(acc.items()), mode)

    @property
    def n_marginals(self) -> int:
        return len(self.spaces)

    @property
    def support(self) -> list:
        return [t for t, _ in self.atoms]

    @property
    def weights(self) -> list:
        return [w for _, w in self.atoms]

    def __len__(self):
        return len(self.atoms)

    def mass(self, predicate) -> Number:
        zero = Fraction(0) if self.mode == RATIONAL else 0.0
        return sum((w for t, w in self.atoms if predicate(t)), zero)


Measure = Union[DiscreteMeasure, DiscreteCoupling]


def _merge_points(pairs: Sequence, mode: str) -> list:
    """Merge ``(point, weight)`` pairs whose points coincide under ``mode``."""
    if mode == RATIONAL:
        acc: dict = {}
        for p, w in pairs:
            acc[p] = acc.get(p, 0) + w
        return list(acc.items())
    merged: list = []
    for p, w in pairs:
        for slot in merged:
            if points_close(slot[0], p, mode):
                slot[1] += w
                break
        else:
            merged.append([p, w])
    return [(p, w) for p, w in merged]


def marginal(plan: DiscreteCoupling, k: int) -> DiscreteMeasure:
    """The ``k``-th marginal of ``plan`` (``k`` counts from 0).

    Atoms whose ``k``-th coordinates coincide are merged.
    """
    if not 0 <= k < plan.n_marginals:
        raise IndexError(f"marginal index {k} out of range for N={plan.n_marginals}")
    pairs = _merge_points([(t[k], w) for t, w in plan.atoms], plan.mode)
    if plan.mode == FLOAT:
        total = math.fsum(w for _, w in pairs)
        pairs = [(p, w / total) for p, w in pairs]
    return DiscreteMeasure(plan.spaces[k], tuple(pairs), plan.mode)


def marginals(plan: DiscreteCoupling) -> list:
    return [marginal(plan, k) for k in range(plan.n_marginals)]


def same_marginals(a: DiscreteCoupling, b: DiscreteCoupling, tol: float = MASS_TOL) -> bool:
    """Compare all marginals; exact if both are rational, else within ``tol``."""
    if a.n_marginals != b.n_marginals:
        return False
    exact = a.mode == RATIONAL and b.mode == RATIONAL
    for k in range(a.n_marginals):
        ma, mb = marginal(a, k).merged(), marginal(b, k).merged()
        if exact:
            if ma != mb:
                return False
            continue
        keys = set(ma) | set(mb)
        # float points are matched with the merge tolerance
        for p in keys:
            wa = sum(float(w) for q, w in ma.items() if points_close(q, p, FLOAT))
            wb = sum(float(w) for q, w in mb.items() if points_close(q, p, FLOAT))
            if abs(wa - wb) > tol:
                return False
    return True


def mixture(a: Measure, b: Measure, t) -> Measure:
    """The convex combination ``t*a + (1-t)*b`` (atoms concatenated, duplicates summed)."""
    if a.mode != b.mode:
        raise ModeError("cannot mix a rational and a float measure")
    t = coerce(t, a.mode)
    if not 0 < t < 1:
        raise ValueError("mixture parameter must lie strictly between 0 and 1")
    pairs = [(p, t * w) for p, w in a.atoms] + [(p, (1 - t) * w) for p, w in b.atoms]
    if isinstance(a, DiscreteCoupling):
        if a.spaces != b.spaces:
            raise ValueError("couplings live on different spaces")
        return DiscreteCoupling.from_pairs(a.spaces, pairs, a.mode)
    if a.space != b.space:
        raise ValueError("measures live on different spaces")
    acc: dict = {}
    for p, w in pairs:
        acc[p] = acc.get(p, 0) + w
    return DiscreteMeasure(a.space, tuple(acc.items()), a.mode)


def product_coupling(measures: Sequence[DiscreteMeasure]) -> DiscreteCoupling:
    """The independent coupling ``mu^1 x ... x mu^N``."""
    modes = {m.mode for m in measures}
    if len(modes) != 1:
        raise ModeError("marginals use different weight modes")
    (mode,) = modes
    pairs = [((), Fraction(1) if mode == RATIONAL else 1.0)]
    for m in measures:
        pairs = [(t + (p,), w * v) for t, w in pairs for p, v in m.atoms]
    return DiscreteCoupling(tuple(m.space for m in measures), tuple(pairs), mode)


def to_float(m: Measure) -> Measure:
    """A float-mode copy of a measure or coupling."""
    if m.mode == FLOAT:
        return m
    if isinstance(m, DiscreteCoupling):
        atoms = tuple((tuple(tuple(float(x) for x in p) for p in t), float(w)) for t, w in m.atoms)
        return DiscreteCoupling(m.spaces, atoms, FLOAT)
    atoms = tuple((tuple(float(x) for x in p), float(w)) for p, w in m.atoms)
    return DiscreteMeasure(m.space, atoms, FLOAT)


def sample_submeasure(plan: DiscreteCoupling, l: int, seed: int) -> DiscreteCoupling:
    """Uniform probability measure on ``l`` distinct support tuples of ``plan``."""
    if not 1 <= l <= len(plan):
        raise ValueError(f"cannot pick {l} tuples from a plan with {len(plan)} atoms")
    rng = np.random.default_rng(seed)
    chosen = sorted(rng.choice(len(plan), size=l, replace=False).tolist())
    w = Fraction(1, l) if plan.mode == RATIONAL else 1.0 / l
    return DiscreteCoupling(plan.spaces, tuple((plan.atoms[i][0], w) for i in chosen), plan.mode)


# --- bounded-Lipschitz discrepancy -------------------------------------------------


def _flat_bounds(a: Measure):
    spaces = a.spaces if isinstance(a, DiscreteCoupling) else (a.space,)
    return [b for s in spaces for b in s.bounds]


def _normalized_coords(a: Measure, bounds) -> tuple:
    lo = np.array([float(b[0]) for b in bounds])
    width = np.array([float(b[1] - b[0]) for b in bounds])
    if isinstance(a, DiscreteCoupling):
        flat = [[float(x) for p in t for x in p] for t in a.support]
    else:
        flat = [[float(x) for x in p] for p in a.points]
    u = (np.asarray(flat, dtype=float) - lo) / width
    return u, np.asarray([float(w) for w in a.weights])


def dictionary_values(u: np.ndarray, dict_size: int) -> np.ndarray:
    """Evaluate the fixed test-function dictionary at normalized points.

    ``u`` has shape ``(n_points, D)`` with coordinates rescaled to ``[0, 1]``.
    Columns: every monomial of degree 1 and 2 in the coordinates, then
    ``sin(2 pi f u_j)`` and ``cos(2 pi f u_j)`` for ``f = 1 .. ceil(dict_size/2)``,
    each clipped to ``[-1, 1]``.
    """
    n, dim = u.shape
    cols = [u[:, j] for j in range(dim)]
    cols += [u[:, i] * u[:, j] for i in range(dim) for j in range(i, dim)]
    for f in range(1, math.ceil(dict_size / 2) + 1):
        for j in range(dim):
            cols.append(np.sin(2 * np.pi * f * u[:, j]))
            cols.append(np.cos(2 * np.pi * f * u[:, j]))
    return np.clip(np.column_stack(cols), -1.0, 1.0)


def bl_discrepancy(a: Measure, b: Measure, dict_size: int = 8) -> float:
    """Largest gap ``|int phi da - int phi db|`` over a fixed test-function dictionary.

    A cheap numerical stand-in for tight convergence: both inputs must live
    on the same spaces. See :func:`dictionary_values` for the dictionary.
    """
    if type(a) is not type(b):
        raise TypeError("cannot compare a measure with a coupling")
    if _flat_bounds(a) != _flat_bounds(b):
        raise ValueError("measures live on different spaces")
    if dict_size < 1:
        raise ValueError("dict_size must be positive")
    bounds = _flat_bounds(a)
    ua, wa = _normalized_coords(a, bounds)
    ub, wb = _normalized_coords(b, bounds)
    ia = wa @ dictionary_values(ua, dict_size)
    ib = wb @ dictionary_values(ub, dict_size)
    return float(np.max(np.abs(ia - ib)))
