"""The rotation plan x -> x + alpha (mod 1) under the cost 1 if x = y, else 2.

With alpha irrational no finite cycle of reassignments can lower the
largest cost (the orbit never closes), so the plan passes the cyclical check
at every length we can afford, yet its sup cost is 2 while the identity
achieves 1 on the continuum. A rational alpha = 1/3 closes a 3-cycle and is
caught immediately.
"""
from cmot import CostSpec, identity_contrast, rotation_plan, run_counterexample, sup_cost
from cmot.monotonicity import check_finite_optimality

m = 30
cost = CostSpec.equality_indicator(1, 2)

for alpha, k_max in (("sqrt2m1", 4), ("golden", 4), ("1/3", 3)):
    res = run_counterexample(alpha, m, k_max)
    cert = res.certificate
    print(f"alpha={alpha:>8}  certificate: {'none' if cert is None else f'k={cert.k}'}"
          f"  C_inf(rotation)={res.sup_rotation}  optimum on its marginals={res.sup_rotation_optimum}")
    if cert is not None:
        print("   cycle:", [(str(x[0]), str(y[0])) for x, y in cert.tuples],
              f"max cost {cert.before} -> {cert.after}")

best, ident = identity_contrast(m)
print(f"identity on the shared grid: C_inf = {ident}, optimum = {best}")

# finitely optimal as well: every small submeasure is optimal between its marginals
plan = rotation_plan("sqrt2m1", m)
audit = check_finite_optimality(plan, cost, "max", trials=40, l_max=4, seed=1)
print("submeasure audit:", "all gaps zero" if audit.passed else f"max gap {audit.max_gap}")
print("so the plan is ICM and finitely optimal, but C_inf =", sup_cost(cost, plan), "> 1")
