from fractions import Fraction as F

import numpy as np
import pytest

from cmot.measures import DiscreteCoupling, DiscreteMeasure, FactorSpace

UNIT = FactorSpace.interval(0, 1)


def grid_points(rng, count, den=1000, dim=1):
    """``count`` distinct points of the grid ``{i/den}^dim`` in the unit cube."""
    pts = set()
    while len(pts) < count:
        pts.add(tuple(F(int(v), den) for v in rng.integers(0, den + 1, dim)))
    return sorted(pts)


def random_plan(rng, n_atoms, n_marg=2, den=1000, space=UNIT, max_weight=9):
    """Rational plan with integer-proportional random weights on grid tuples."""
    tuples = set()
    while len(tuples) < n_atoms:
        tuples.add(tuple((F(int(rng.integers(0, den + 1)), den),) for _ in range(n_marg)))
    w = rng.integers(1, max_weight + 1, n_atoms)
    total = int(w.sum())
    atoms = tuple((t, F(int(x), total)) for t, x in zip(sorted(tuples), w))
    return DiscreteCoupling((space,) * n_marg, atoms)


def uniform_measure(points, space=UNIT):
    return DiscreteMeasure.uniform(space, points)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# --- acceptance summary: one line per criterion -------------------------------------

_ACCEPTANCE = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call" and item.module.__name__.endswith("test_acceptance"):
        label = getattr(item.function, "criterion", item.name)
        detail = dict(item.user_properties).get("detail", "")
        _ACCEPTANCE[label] = ("PASS" if rep.passed else "FAIL", detail)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for label in sorted(_ACCEPTANCE):
        status, detail = _ACCEPTANCE[label]
        terminalreporter.write_line(f"{label}: {status}  {detail}".rstrip())
