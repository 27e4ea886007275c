import math

import numpy as np
import pytest
from hypothesis import given, seed, settings, strategies as st

from quasifact.majorize import Move, cascade_redistribute, flatten_step_delta, majorizes, replay_moves
from quasifact.matcore import ValidationError


def test_majorizes_examples():
    assert majorizes([0.2, 0.8], [0.8, 0.2])
    assert majorizes([0.5, 0.3, 0.2], [0.4, 0.35, 0.25])
    assert not majorizes([0.4, 0.35, 0.25], [0.5, 0.3, 0.2])
    with pytest.raises(ValidationError):
        majorizes([1.0], [0.5, 0.5])


def test_cascade_examples():
    assert cascade_redistribute([0.5, 0.5], [0.5, 0.5]) == []
    moves = cascade_redistribute([0.5, 0.3, 0.2], [0.4, 0.35, 0.25])
    assert [(m.from_index, m.to_index) for m in moves] == [(0, 1), (0, 2)]
    assert [m.delta for m in moves] == pytest.approx([0.05, 0.05], abs=1e-15)
    (m,) = cascade_redistribute([0.8, 0.2], [0.6, 0.4])
    assert (m.from_index, m.to_index) == (0, 1) and m.delta == pytest.approx(0.2)


def test_cascade_errors():
    with pytest.raises(ValidationError):
        cascade_redistribute([0.4, 0.35, 0.25], [0.5, 0.3, 0.2])
    with pytest.raises(ValidationError):
        cascade_redistribute([0.3, 0.7], [0.5, 0.5])


@seed(1)
@settings(max_examples=200, deadline=None)
@given(st.integers(2, 8), st.integers(0, 2**31), st.floats(0.0, 1.0))
def test_cascade_hits_target(n, s, lam):
    rng = np.random.default_rng(s)
    p = np.sort(rng.dirichlet(np.ones(n)))[::-1]
    q = np.sort(lam * p + (1 - lam) / n)[::-1]
    moves = cascade_redistribute(p, q)
    out = replay_moves(p, moves)
    assert np.max(np.abs(out - q)) < 1e-12
    assert all(m.delta > 0 and m.from_index < m.to_index for m in moves)
    assert len(moves) <= n * n


def test_flatten_examples():
    assert flatten_step_delta([0.7, 0.3], [0.5, 0.5], 0, 1, 0.0) == 0
    expected = 0.7 * math.log(0.5 / 0.4) + 0.3 * math.log(0.5 / 0.6)
    got = flatten_step_delta([0.7, 0.3], [0.5, 0.5], 0, 1, 0.1)
    assert got == pytest.approx(expected, abs=1e-15)
    # the often-quoted 0.1014623 does not match the formula
    assert got == pytest.approx(0.1015040, abs=1e-7)


def test_flatten_errors():
    with pytest.raises(ValidationError):
        flatten_step_delta([0.3, 0.7], [0.5, 0.5], 0, 1, 0.1)
    with pytest.raises(ValidationError):
        flatten_step_delta([0.7, 0.3], [0.5, 0.5], 0, 1, 0.6)


@seed(2)
@settings(max_examples=200, deadline=None)
@given(st.integers(2, 6), st.integers(0, 2**31), st.floats(0.0, 1.0))
def test_flatten_nonnegative(n, s, frac):
    rng = np.random.default_rng(s)
    rho = rng.dirichlet(np.ones(n))
    om = rng.dirichlet(np.ones(n))
    i, j = rng.choice(n, 2, replace=False)
    if rho[i] < rho[j]:
        i, j = j, i
    if rho[i] * om[j] < rho[j] * om[i]:
        return
    dv = flatten_step_delta(rho, om, int(i), int(j), frac * om[i])
    assert dv >= -1e-10
    direct_after = om.copy()
    direct_after[i] -= frac * om[i]
    direct_after[j] += frac * om[i]
    if frac < 0.99:
        d0 = float(np.sum(rho * np.log(rho / om)))
        d1 = float(np.sum(rho * np.log(rho / direct_after)))
        assert dv == pytest.approx(d1 - d0, rel=1e-9, abs=1e-10)


def test_move_is_tuple():
    assert Move(0, 1, 0.5) == (0, 1, 0.5)
