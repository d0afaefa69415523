"""Cyclical monotonicity certification and the finite-optimality machinery.

A *certificate* is a witness that a support set is not (infinitely)
c-cyclically monotone: ``k`` support tuples and ``N-1`` permutations of
``range(k)`` such that reassigning coordinate ``j`` of row ``i`` to row
``perm_j[i]`` strictly lowers the summed (CM) or maximal (ICM) cost.
Permutations are 0-based throughout.
"""
from __future__ import annotations

import itertools
import math
from collections import defaultdict, deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .costs import INF, CostSpec, eval_cost, objective_value
from .measures import (FLOAT, MASS_TOL, RATIONAL, DiscreteCoupling, marginals, points_close,
                       same_marginals, sample_submeasure)
from .solvers import GuardExceeded, MotInstance, solve

MAX_K = 5
MAX_N = 3
MAX_SUPPORT = 60
DEFAULT_MAX_EVALS = 50_000_000
FLOAT_RTOL = 1e-12
_CHUNK = 4_000_000


@dataclass(frozen=True)
class Certificate:
    tuples: tuple
    permutations: tuple
    before: object
    after: object
    aggregate: str
    indices: tuple = field(default=(), compare=False)

    @property
    def k(self) -> int:
        return len(self.tuples)

    def reassigned(self) -> list:
        """The rows after applying the permutations."""
        n = len(self.tuples[0])
        return [tuple([self.tuples[i][0]] + [self.tuples[perm[i]][j]
                                             for j, perm in zip(range(1, n), self.permutations)])
                for i in range(self.k)]


def _aggregate(values, kind):
    if kind == "sum":
        if any(v == INF for v in values):
            return INF
        if any(isinstance(v, float) for v in values):
            return math.fsum(float(v) for v in values)
        return sum(values, Fraction(0))
    return max(values)


def verify_certificate(cert: Certificate, c: CostSpec, support: Optional[Sequence] = None) -> bool:
    """Recompute ``before``/``after`` from the certificate's own fields."""
    k = cert.k
    for perm in cert.permutations:
        if sorted(perm) != list(range(k)):
            return False
    if support is not None:
        supp = set(map(tuple, support))
        if any(t not in supp for t in cert.tuples):
            return False
    before = _aggregate([eval_cost(c, t) for t in cert.tuples], cert.aggregate)
    after = _aggregate([eval_cost(c, t) for t in cert.reassigned()], cert.aggregate)
    return before == cert.before and after == cert.after and _violates(after, before)


def _violates(after, before) -> bool:
    if isinstance(after, float) or isinstance(before, float):
        if before == INF:
            return after < INF
        return after < before - FLOAT_RTOL * max(1.0, abs(before))
    return after < before


def _cost_table(support, c):
    """Cost tensor over the distinct coordinates, plus per-tuple coordinate indices."""
    n = len(support[0])
    coords, index = [], []
    for j in range(n):
        pts = sorted({t[j] for t in support})
        pos = {p: i for i, p in enumerate(pts)}
        coords.append(pts)
        index.append(np.array([pos[t[j]] for t in support], dtype=np.int64))
    shape = tuple(len(p) for p in coords)
    raw = np.empty(shape, dtype=object)
    for idx in np.ndindex(shape):
        raw[idx] = eval_cost(c, tuple(coords[j][i] for j, i in enumerate(idx)))
    flat = list(raw.flat)
    if all(isinstance(v, (int, Fraction)) for v in flat):
        den = math.lcm(*(Fraction(v).denominator for v in flat))
        ints = [int(Fraction(v) * den) for v in flat]
        if max(abs(v) for v in ints) * MAX_K < 2 ** 62:
            return np.array(ints, dtype=np.int64).reshape(shape), index, "int"
        return raw, index, "object"
    if all(math.isfinite(v) for v in flat):
        return np.array([float(v) for v in flat]).reshape(shape), index, "float"
    return raw, index, "object"


def _count_evals(n_support, k_max, n_marg):
    return sum(math.factorial(k) ** (n_marg - 1) * math.comb(n_support + k - 1, k)
               for k in range(2, k_max + 1))


def _search(support, c: CostSpec, k_max: int, aggregate: str, max_evals: int) -> Optional[Certificate]:
    support = [tuple(t) for t in support]
    if k_max < 2:
        raise ValueError("k_max must be at least 2")
    if not support:
        raise ValueError("support is empty")
    n_marg = len(support[0])
    if k_max > MAX_K or n_marg > MAX_N or len(support) > MAX_SUPPORT:
        raise GuardExceeded(f"exhaustive search limited to k<={MAX_K}, N<={MAX_N}, "
                            f"|support|<={MAX_SUPPORT}")
    evals = _count_evals(len(support), k_max, n_marg)
    if evals > max_evals:
        raise GuardExceeded(f"search needs {evals} evaluations, guard is {max_evals}")
    table, index, kind = _cost_table(support, c)
    reduce = np.sum if aggregate == "sum" else np.max
    for k in range(2, k_max + 1):
        perms = np.array(list(itertools.permutations(range(k))), dtype=np.int64)
        combos = np.array(list(itertools.product(range(len(perms)), repeat=n_marg - 1)), dtype=np.int64)
        multisets = np.array(list(itertools.combinations_with_replacement(range(len(support)), k)),
                             dtype=np.int64)
        step = max(1, _CHUNK // (len(combos) * k))
        for start in range(0, len(multisets), step):
            ms = multisets[start:start + step]
            cols = [index[j][ms] for j in range(n_marg)]
            before = reduce(table[tuple(cols)], axis=-1)
            moved = [np.broadcast_to(cols[0][:, None, :], (len(ms), len(combos), k))]
            for j in range(1, n_marg):
                p = perms[combos[:, j - 1]]
                moved.append(np.take_along_axis(cols[j][:, None, :].repeat(len(combos), 1),
                                                np.broadcast_to(p, (len(ms),) + p.shape), axis=2))
            after = reduce(table[tuple(moved)], axis=-1)
            b = before[:, None]
            if kind == "float":
                bad = np.where(np.isinf(b), after < np.inf,
                               after < b - FLOAT_RTOL * np.maximum(1.0, np.abs(b)))
            else:
                bad = np.asarray(after < b, dtype=bool)
            if bad.any():
                row, col = divmod(int(np.argmax(bad.ravel())), len(combos))
                chosen = tuple(int(i) for i in ms[row])
                tuples = tuple(support[i] for i in chosen)
                perm_seq = tuple(tuple(int(v) for v in perms[combos[col, j]])
                                 for j in range(n_marg - 1))
                cert = Certificate(tuples, perm_seq, None, None, aggregate, chosen)
                before_v = _aggregate([eval_cost(c, t) for t in tuples], aggregate)
                after_v = _aggregate([eval_cost(c, t) for t in cert.reassigned()], aggregate)
                return Certificate(tuples, perm_seq, before_v, after_v, aggregate, chosen)
    return None


def check_cm(support, c: CostSpec, k_max: int, max_evals: int = DEFAULT_MAX_EVALS
             ) -> Optional[Certificate]:
    """Exhaustive c-cyclical monotonicity check up to cycle length ``k_max``.

    Searches every multiset of ``k <= k_max`` support tuples and every
    ``(N-1)``-tuple of permutations. Returns ``None`` if no reassignment
    strictly lowers the summed cost, otherwise the first violation in the
    order (k, tuple indices, permutations).
    """
    return _search(support, c, k_max, "sum", max_evals)


def check_icm(support, c: CostSpec, k_max: int, max_evals: int = DEFAULT_MAX_EVALS
              ) -> Optional[Certificate]:
    """As :func:`check_cm` with the maximum over the ``k`` tuples as aggregate."""
    return _search(support, c, k_max, "max", max_evals)


# --- integer tables and permutations ------------------------------------------------


@dataclass(frozen=True)
class IntegerTable:
    """Rows of a positive-integer-weight coupling, each atom repeated by its weight."""

    rows: tuple
    groups: tuple

    def __len__(self):
        return len(self.rows)


def expand_to_table(atoms, scale=1) -> IntegerTable:
    """Expand ``(tuple, m_i)`` pairs into ``sum m_i`` rows.

    ``atoms`` is a sequence of pairs or a :class:`DiscreteCoupling`, whose
    weights are multiplied by ``scale`` first.
    """
    if isinstance(atoms, DiscreteCoupling):
        atoms = atoms.atoms
    rows, groups = [], []
    for g, (tup, m) in enumerate(atoms):
        m = Fraction(m) * Fraction(scale) if not isinstance(m, float) else m * scale
        if isinstance(m, float) or Fraction(m).denominator != 1 or m <= 0:
            raise ValueError(f"weight {m} of atom {g} is not a positive integer")
        rows.extend([tuple(tup)] * int(m))
        groups.extend([g] * int(m))
    return IntegerTable(tuple(rows), tuple(groups))


def apply_permutations(A: IntegerTable, perms) -> list:
    """Rows ``(A[i][0], A[perm_2[i]][1], ..., A[perm_N[i]][N-1])``."""
    return [tuple([A.rows[i][0]] + [A.rows[p[i]][j] for j, p in enumerate(perms, start=1)])
            for i in range(len(A))]


def find_permutations(A: IntegerTable, B: IntegerTable) -> Optional[list]:
    """Permutations rebuilding ``B`` (up to row order) from the columns of ``A``.

    Returns ``None`` when some column multiset of ``A`` differs from ``B``'s,
    i.e. when the underlying couplings have different marginals.
    """
    if len(A) != len(B):
        raise ValueError(f"row counts differ: {len(A)} vs {len(B)}")
    if not len(A):
        return []
    n = len(A.rows[0])
    for j in range(n):
        if sorted(r[j] for r in A.rows) != sorted(r[j] for r in B.rows):
            return None
    # pair each row of A with a row of B sharing its first coordinate
    free = defaultdict(deque)
    for i, row in enumerate(B.rows):
        free[row[0]].append(i)
    match = [free[row[0]].popleft() for row in A.rows]
    perms = []
    for j in range(1, n):
        holders = defaultdict(deque)
        for i, row in enumerate(A.rows):
            holders[row[j]].append(i)
        perms.append(tuple(holders[B.rows[match[i]][j]].popleft() for i in range(len(A))))
    return perms


# --- rationalization ----------------------------------------------------------------


def _coordinate_keys(a: DiscreteCoupling, b: DiscreteCoupling, mode: str):
    """Map every coordinate point to a canonical representative, per marginal."""
    keys = []
    for j in range(a.n_marginals):
        reps: list = []
        lookup = {}
        for plan in (a, b):
            for t in plan.support:
                p = t[j]
                if p in lookup:
                    continue
                for r in reps:
                    if points_close(r, p, mode):
                        lookup[p] = r
                        break
                else:
                    reps.append(p)
                    lookup[p] = p
        keys.append((reps, lookup))
    return keys


def marginal_matrix(a: DiscreteCoupling, b: DiscreteCoupling) -> list:
    """The integer matrix whose kernel holds the weight vectors with equal marginals.

    Columns are the atoms of ``a`` followed by those of ``b``; one row per
    (marginal, point) with entries in ``{1, 0, -1}``.
    """
    mode = RATIONAL if a.mode == b.mode == RATIONAL else FLOAT
    rows = []
    for j, (reps, lookup) in enumerate(_coordinate_keys(a, b, mode)):
        for r in reps:
            row = [1 if lookup[t[j]] == r else 0 for t in a.support]
            row += [-1 if lookup[t[j]] == r else 0 for t in b.support]
            rows.append(row)
    return rows


def rational_kernel(M) -> tuple:
    """Exact kernel basis of an integer matrix via reduced row echelon form.

    Returns ``(basis, free)``: ``basis[f]`` is the kernel vector with a 1 in
    free column ``free[f]`` and 0 in the other free columns.
    """
    R = [[Fraction(v) for v in row] for row in M]
    n = len(R[0]) if R else 0
    pivots = []
    r = 0
    for col in range(n):
        piv = next((i for i in range(r, len(R)) if R[i][col] != 0), None)
        if piv is None:
            continue
        R[r], R[piv] = R[piv], R[r]
        lead = R[r][col]
        R[r] = [v / lead for v in R[r]]
        for i in range(len(R)):
            if i != r and R[i][col] != 0:
                f = R[i][col]
                R[i] = [x - f * y for x, y in zip(R[i], R[r])]
        pivots.append(col)
        r += 1
        if r == len(R):
            break
    free = [j for j in range(n) if j not in pivots]
    basis = []
    for f in free:
        v = [Fraction(0)] * n
        v[f] = Fraction(1)
        for i, pc in enumerate(pivots):
            v[pc] = -R[i][f]
        basis.append(v)
    return basis, free


def rationalize_pair(a: DiscreteCoupling, b: DiscreteCoupling, eps, max_denominator: int = 10 ** 18):
    """Rational couplings on the supports of ``a`` and ``b`` with exactly equal marginals.

    Weights move by less than ``eps`` componentwise and stay positive. The
    free coordinates of the kernel are rounded by continued fractions with
    denominators starting at ``ceil(1/eps)``; the bound grows tenfold until the
    error and positivity requirements hold.
    """
    eps = Fraction(eps)
    if eps <= 0:
        raise ValueError("eps must be positive")
    if a.n_marginals != b.n_marginals:
        raise ValueError("couplings have different numbers of marginals")
    if not same_marginals(a, b, MASS_TOL):
        raise ValueError("couplings have different marginals")
    if a.mode == b.mode == RATIONAL:
        return a, b
    mode = RATIONAL if a.mode == b.mode == RATIONAL else FLOAT
    keys = _coordinate_keys(a, b, mode)

    def canon(t):
        return tuple(tuple(Fraction(x) for x in keys[j][1][p]) for j, p in enumerate(t))

    M = marginal_matrix(a, b)
    basis, free = rational_kernel(M)
    real = [float(w) for w in a.weights] + [float(w) for w in b.weights]
    la = len(a)
    margin = min(real)
    D = math.ceil(1 / eps)
    while D <= max_denominator:
        coeffs = [Fraction(real[f]).limit_denominator(D) for f in free]
        q = [sum((cf * v[i] for cf, v in zip(coeffs, basis)), Fraction(0)) for i in range(len(real))]
        total = sum(q[:la])
        if total > 0:
            q = [v / total for v in q]
            if all(v > 0 for v in q) and all(abs(v - Fraction(r)) < eps for v, r in zip(q, real)):
                out_a = DiscreteCoupling(a.spaces, tuple((canon(t), w) for t, w in zip(a.support, q[:la])),
                                         RATIONAL)
                out_b = DiscreteCoupling(b.spaces, tuple((canon(t), w) for t, w in zip(b.support, q[la:])),
                                         RATIONAL)
                return out_a, out_b
        D *= 10
    raise ValueError(f"could not keep weights positive within eps={eps}; "
                     f"smallest input weight (positivity margin) is {margin}")


# --- finite-optimality audit --------------------------------------------------------


@dataclass(frozen=True)
class AuditReport:
    objective: str
    sizes: tuple
    gaps: tuple
    passed: bool

    @property
    def max_gap(self):
        return max(self.gaps)


def check_finite_optimality(plan: DiscreteCoupling, c: CostSpec, objective: str, trials: int,
                            l_max: int, seed: int, max_cells: int = 10 ** 6) -> AuditReport:
    """Re-solve random finitely supported submeasures of ``plan`` exactly.

    Each trial draws a size ``l <= l_max``, a uniform submeasure on ``l``
    support tuples, and compares its objective with the optimum between its
    own marginals. The audit passes iff no gap is positive (exactly, or
    beyond ``1e-9`` once floats are involved).
    """
    if trials < 1 or l_max < 1:
        raise ValueError("trials and l_max must be positive")
    rng = np.random.default_rng(seed)
    top = min(l_max, len(plan))
    sizes, gaps = [], []
    for _ in range(trials):
        l = int(rng.integers(1, top + 1))
        sub = sample_submeasure(plan, l, int(rng.integers(2 ** 32)))
        inst = MotInstance(tuple(marginals(sub)), c, objective)
        best = solve(inst, max_cells=max_cells).value
        gap = objective_value(c, sub, objective) - best
        sizes.append(l)
        gaps.append(gap)
    tol = 1e-9 if any(isinstance(g, float) for g in gaps) else 0
    return AuditReport(objective, tuple(sizes), tuple(gaps), all(g <= tol for g in gaps))
