"""Equal-marginal couplings as integer tables, and rational rounding.

Two couplings with integer weights and the same marginals expand to tables
with the same column multisets; a permutation per column turns one table
into the other. Real weights are first pulled to nearby rationals inside the
kernel of the marginal constraints, so the marginals stay exactly equal.
"""
from fractions import Fraction as F

from cmot.measures import FLOAT, DiscreteCoupling, FactorSpace, marginal
from cmot.monotonicity import (apply_permutations, expand_to_table, find_permutations,
                               rationalize_pair)

unit = FactorSpace.interval(0, 1)
z, h, o = (F(0),), (F(1, 2),), (F(1),)

a = [((z, z), 2), ((h, o), 1), ((o, h), 1)]
b = [((z, h), 1), ((z, o), 1), ((h, z), 1), ((o, z), 1)]
A, B = expand_to_table(a), expand_to_table(b)
perms = find_permutations(A, B)
print("A rows:", [(str(x[0]), str(y[0])) for x, y in A.rows])
print("B rows:", [(str(x[0]), str(y[0])) for x, y in B.rows])
print("column permutation:", perms[0])
print("rebuilt:", sorted((str(x[0]), str(y[0])) for x, y in apply_permutations(A, perms)))

# real weights with equal marginals
t = 0.2718281828
fa = DiscreteCoupling((unit, unit), ((((0.0,), (0.0,)), t), (((1.0,), (1.0,)), 1 - t)), FLOAT)
fb = DiscreteCoupling((unit, unit), ((((0.0,), (0.0,)), t / 2), (((0.0,), (1.0,)), t / 2),
                                     (((1.0,), (0.0,)), t / 2), (((1.0,), (1.0,)), 1 - 1.5 * t)), FLOAT)
for eps in (F(1, 100), F(1, 10 ** 6)):
    qa, qb = rationalize_pair(fa, fb, eps)
    print(f"eps={eps}: a -> {[str(w) for w in qa.weights]}, b -> {[str(w) for w in qb.weights]}")
    print("   marginals equal:", all(marginal(qa, k).merged() == marginal(qb, k).merged() for k in (0, 1)))
