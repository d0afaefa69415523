"""Exact transport between two small discrete measures.

Both objectives on the same pair of marginals: the summed cost (integral
problem) and the largest cost charged (bottleneck problem). The results are
checked against brute-force enumeration of permutation plans.
"""
from fractions import Fraction as F

import numpy as np

from cmot import CostSpec, DiscreteMeasure, FactorSpace, MotInstance, brute_force_oracle, solve

box = FactorSpace.interval(0, 2)
rng = np.random.default_rng(0)

xs = sorted({F(int(v), 8) for v in rng.integers(0, 17, 5)})
ys = sorted({F(int(v), 8) for v in rng.integers(0, 17, len(xs) + 3)})[:len(xs)]
mu = DiscreteMeasure.uniform(box, [(x,) for x in xs])
nu = DiscreteMeasure.uniform(box, [(y,) for y in ys])
print("mu atoms:", [str(x) for x in xs])
print("nu atoms:", [str(y) for y in ys])

for p in (1, 2):
    cost = CostSpec.power_distance(p)
    for objective in ("sum", "max"):
        inst = MotInstance((mu, nu), cost, objective)
        sol = solve(inst)
        ref = brute_force_oracle(inst)
        pairs = ", ".join(f"{t[0][0]}->{t[1][0]}" for t in sol.plan.support)
        print(f"p={p} {objective:>3}: value {sol.value} (oracle {ref.value})  plan {pairs}")

# the same instance in floating point goes through HiGHS
fmu, fnu = (DiscreteMeasure(m.space, tuple(((float(p[0]),), float(w)) for p, w in m.atoms), "float")
            for m in (mu, nu))
print("float, p=2:", solve(MotInstance((fmu, fnu), CostSpec.power_distance(2), "sum")).value)

# three marginals: pairwise squared distances
three = MotInstance((mu, nu, mu), CostSpec.squared_sum_barycenter(3), "sum")
print("N=3 barycentric cost:", solve(three).value)
