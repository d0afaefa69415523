"""Exact two-phase tableau simplex over ``Fraction``.

Pricing is Dantzig's rule; during a run of degenerate pivots it switches to
Bland's rule, which rules out cycling.

Solves ``min c.x  s.t.  A x = b, x >= 0`` (``b >= 0``) for a list of
objectives in lexicographic order: after objective ``r`` is optimal, every
nonbasic column with positive reduced cost is frozen at zero, which pins the
iterate to the optimal face of ``r`` while objective ``r+1`` is optimized.
"""
from __future__ import annotations

from fractions import Fraction
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import linprog

ZERO = Fraction(0)
# consecutive degenerate pivots before pricing falls back to Bland's rule
DEGENERATE_STREAK = 25


class Unbounded(ArithmeticError):
    pass


class _Tableau:
    def __init__(self, A, b, objectives):
        m = len(A)
        n = len(A[0]) if m else 0
        self.n = n
        self.rows = []
        for i in range(m):
            row = [Fraction(v) for v in A[i]] + [ZERO] * m
            row[n + i] = Fraction(1)
            row.append(Fraction(b[i]))
            self.rows.append(row)
        self.basis = [n + i for i in range(m)]
        width = n + m
        # phase-one reduced costs: minimize the sum of artificials
        phase1 = [ZERO] * (width + 1)
        for row in self.rows:
            for j in range(n):
                if row[j]:
                    phase1[j] -= row[j]
            phase1[width] -= row[width]
        self.cost_rows = [phase1]
        for c in objectives:
            self.cost_rows.append([Fraction(v) for v in c] + [ZERO] * (m + 1))

    def pivot(self, r: int, j: int):
        prow = self.rows[r]
        piv = prow[j]
        if piv != 1:
            prow = [v / piv for v in prow]
            self.rows[r] = prow
        nz = [k for k, v in enumerate(prow) if v]
        for i, row in enumerate(self.rows):
            if i != r:
                f = row[j]
                if f:
                    for k in nz:
                        row[k] -= f * prow[k]
        for row in self.cost_rows:
            f = row[j]
            if f:
                for k in nz:
                    row[k] -= f * prow[k]
        self.basis[r] = j

    def optimize(self, which: int, allowed: Sequence[bool]):
        d = self.cost_rows[which]
        streak = 0
        while True:
            candidates = [k for k, ok in enumerate(allowed) if ok and d[k] < 0]
            if not candidates:
                return
            if streak >= DEGENERATE_STREAK:
                j = candidates[0]  # Bland
            else:
                j = min(candidates, key=lambda k: (d[k], k))  # Dantzig
            best = None
            for i, row in enumerate(self.rows):
                a = row[j]
                if a > 0:
                    key = (row[-1] / a, self.basis[i])
                    if best is None or key < best[0]:
                        best = (key, i)
            if best is None:
                raise Unbounded("objective is unbounded below")
            streak = streak + 1 if best[0][0] == 0 else 0
            self.pivot(best[1], j)


def exact_lexicographic_lp(A, b, objectives) -> Optional[list]:
    """Return an exact vertex solution or ``None`` when infeasible.

    ``A`` is a dense list of rows, ``b`` a nonnegative right-hand side and
    ``objectives`` a (possibly empty) list of cost vectors, minimized in order.
    """
    if any(Fraction(v) < 0 for v in b):
        raise ValueError("right-hand side must be nonnegative")
    n = len(A[0]) if A else len(objectives[0]) if objectives else 0
    if not A:
        return [ZERO] * n
    t = _Tableau(A, b, objectives)
    m = len(A)
    allowed = [True] * n + [False] * m
    t.optimize(0, allowed)
    if t.cost_rows[0][-1] != 0:
        return None
    # drive zero-level artificials out; rows where that fails are redundant
    i = 0
    while i < len(t.rows):
        if t.basis[i] >= n:
            row = t.rows[i]
            j = next((k for k in range(n) if row[k] != 0), None)
            if j is None:
                del t.rows[i]
                del t.basis[i]
                continue
            t.pivot(i, j)
        i += 1
    for r in range(1, len(t.cost_rows)):
        t.optimize(r, allowed)
        d = t.cost_rows[r]
        basic = set(t.basis)
        for k in range(n):
            if k not in basic and d[k] > 0:
                allowed[k] = False
    x = [ZERO] * n
    for i, j in enumerate(t.basis):
        x[j] = t.rows[i][-1]
    return x


def float_lexicographic_lp(A, b, objectives, tol: float = 1e-9) -> Optional[np.ndarray]:
    """Floating-point counterpart backed by HiGHS (dual simplex, vertex output)."""
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    n = A.shape[1]
    if not objectives:
        objectives = [np.zeros(n)]
    A_ub = np.zeros((0, n))
    b_ub = np.zeros(0)
    x = None
    for c in objectives:
        c = np.asarray(c, dtype=float)
        res = linprog(c, A_ub=A_ub if len(b_ub) else None, b_ub=b_ub if len(b_ub) else None,
                      A_eq=A, b_eq=b, bounds=(0, None), method="highs-ds",
                      options={"primal_feasibility_tolerance": tol,
                               "dual_feasibility_tolerance": tol})
        if res.status == 2:
            return None
        if res.status != 0:
            raise RuntimeError(f"LP solver failed: {res.message}")
        x = res.x
        A_ub = np.vstack([A_ub, c])
        b_ub = np.append(b_ub, res.fun + tol * max(1.0, abs(res.fun)))
    return np.clip(x, 0.0, None)
