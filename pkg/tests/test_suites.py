import math

import pytest

from quasifact.suites import SUITES, digest, run_suite, trial_rng

EXPECTED = {"ssa", "subadd", "chain", "keylem", "normform", "wnorm-triangle", "thmrelent", "worstsig",
            "flatten", "revconv", "corsimpleg", "ephi", "near", "qf-mub", "dataproc"}


def test_registry():
    assert set(SUITES) == EXPECTED


@pytest.mark.parametrize("name", sorted(EXPECTED))
@pytest.mark.parametrize("dim", [2, 3, 5])
def test_suite_clean(name, dim):
    res = run_suite(name, dim, 15, seed=123)
    assert res.violations == [], res.violations[:3]
    assert math.isfinite(res.min_slack) and res.min_slack >= -1e-8


def test_determinism():
    a = run_suite("revconv", 3, 5, seed=4)
    b = run_suite("revconv", 3, 5, seed=4)
    assert a.min_slack == b.min_slack
    c = run_suite("revconv", 3, 5, seed=5)
    assert c.min_slack != a.min_slack
    assert trial_rng(1, "x", 2, 3).random() == trial_rng(1, "x", 2, 3).random()


def test_errors():
    with pytest.raises(KeyError):
        run_suite("nosuch", 2, 1)
    assert len(digest((1.0, [1, 2]))) == 16


def test_tolerance_flags_violations():
    # a negative tolerance turns every tight instance into a reported violation
    res = run_suite("chain", 2, 3, seed=0, tol=-1.0)
    assert len(res.violations) == 3
    assert all(set(v) >= {"suite", "instance", "slack"} for v in res.violations)
