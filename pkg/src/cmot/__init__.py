"""Discrete multi-marginal optimal transport with integral and sup costs.

Exact (``Fraction``) and floating solvers, cyclical monotonicity
certificates, dyadic discretization and the discretize-and-resolve
experiments built on them.
"""
from .costs import CostSpec, eval_cost, integral_cost, objective_value, sup_cost
from .discretization import (build_partition, convergence_report, discretize_plan, plan_partition,
                             recovery_sequence)
from .experiments import (identity_contrast, rotation_plan, run_counterexample,
                          run_gamma_experiment, shift_plan, verify_optimality_theorem)
from .measures import (FLOAT, RATIONAL, DiscreteCoupling, DiscreteMeasure, FactorSpace,
                       bl_discrepancy, marginal, marginals)
from .monotonicity import (Certificate, check_cm, check_finite_optimality, check_icm,
                           expand_to_table, find_permutations, rationalize_pair,
                           verify_certificate)
from .solvers import (GuardExceeded, MotInstance, Solution, brute_force_oracle,
                      feasibility_at_level, solve, solve_integral_mot, solve_sup_mot)

__version__ = "0.1.0"
