"""Discretize a plan on dyadic grids and re-solve at every level.

A uniform grid on [0, 1] shifted by 1/2: the monotone plan costs exactly
1/4 under the squared distance. At each level the plan is collapsed to one
representative atom per product cell and the transport problem between the
collapsed marginals is solved again.
"""
from fractions import Fraction as F

import numpy as np

from cmot import CostSpec, shift_plan
from cmot.discretization import convergence_report
from cmot.experiments import run_gamma_experiment, verify_optimality_theorem
from cmot.measures import DiscreteCoupling, FactorSpace

cost = CostSpec.power_distance(2)
plan = shift_plan(16)

run = run_gamma_experiment(plan, cost, "sum", range(1, 6), analytic=F(1, 4))
print(" n   delta     atoms  min       gap  discrepancy to limit")
for r in run.records:
    print(f"{r.level:2d}  {r.delta:.4f}  {len(r.minimizer):5d}  {str(r.min_value):8s}  "
          f"{str(r.gap):3s}  {r.discrepancy_to_limit:.2e}")

# convergence of the collapsed plan itself, on a random 50-atom plan
rng = np.random.default_rng(3)
unit = FactorSpace.interval(0, 1)
pts = sorted({((F(int(a), 1000),), (F(int(b), 1000),)) for a, b in rng.integers(0, 1001, (50, 2))})
w = rng.integers(1, 10, len(pts))
rand = DiscreteCoupling((unit, unit), tuple((t, F(int(x), int(w.sum()))) for t, x in zip(pts, w)))
print("\n n  discrepancy  objective  envelope")
for row in convergence_report(rand, cost, "sum", range(1, 7)):
    print(f"{row.level:2d}  {row.discrepancy:.5f}      {float(row.objective):.5f}    {row.envelope:.4f}")

verdict = verify_optimality_theorem(plan, cost, "sum", k_max=3, levels=[1, 2, 3], trials=20)
print("\nverdict on the shift plan:", verdict.label)
