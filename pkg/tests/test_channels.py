import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from quasifact.channels import (
    SubalgebraBlocks,
    apply_channel,
    block_expectation,
    choi_distance,
    choi_matrix,
    commuting_square_gap,
    compose,
    convex_combine,
    from_choi,
    from_kraus,
    from_mixture,
    group_average_expectation,
    identity_channel,
    index_estimate,
    intersection_expectation,
    max_expectation_weight,
    near_zeta_scalar_states,
    near_zeta_sufficient,
    partial_trace_expectation,
    pinching_expectation,
    scalar_expectation,
    superop_distance,
    weighted_expectation,
)
from quasifact.matcore import ValidationError, random_density, random_unitary

H = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Z = np.diag([1, -1]).astype(complex)
Y = 1j * X @ Z
SWAP = np.eye(4)[[0, 2, 1, 3]]


def fourier(d):
    k = np.arange(d)
    return np.exp(2j * np.pi * np.outer(k, k) / d) / np.sqrt(d)


def test_pinching_examples():
    e = pinching_expectation(np.eye(2))
    assert np.allclose(e(np.diag([0.3, 0.7])), np.diag([0.3, 0.7]))
    assert np.allclose(e(np.full((2, 2), 0.5)), np.eye(2) / 2)
    assert np.allclose(pinching_expectation(H)(np.diag([1.0, 0])), np.eye(2) / 2)


def test_pinching_rejects_non_unitary():
    with pytest.raises(ValidationError):
        pinching_expectation(np.array([[1, 1], [0, 1]]))


def test_block_expectation_examples():
    rho = random_density(3, "hilbert-schmidt", 0)
    assert np.allclose(block_expectation(SubalgebraBlocks.standard([(3, 1)]))(rho), rho)
    assert np.allclose(block_expectation(SubalgebraBlocks.standard([(1, 3)]))(rho), np.eye(3) / 3)
    two = block_expectation(SubalgebraBlocks.standard([(1, 1), (1, 1)]))
    assert superop_distance(two, pinching_expectation(np.eye(2))) < 1e-14


def test_block_dimension_mismatch():
    with pytest.raises(ValidationError):
        SubalgebraBlocks.standard([(2, 2)]).__class__(np.eye(3), ((2, 2),))


def test_weighted_expectation_examples():
    u = SubalgebraBlocks.standard([(1, 2)], [np.eye(2) / 2])
    assert superop_distance(weighted_expectation(u), scalar_expectation(2)) < 1e-14
    w = weighted_expectation(SubalgebraBlocks.standard([(1, 2)], [np.diag([0.9, 0.1])]))
    for s in range(100):
        rho = random_density(2, "hilbert-schmidt", s)
        assert np.allclose(w(rho), np.diag([0.9, 0.1]))
        assert np.allclose(w(w(rho)), w(rho))


def test_group_average_examples():
    assert superop_distance(group_average_expectation([np.eye(3)]), identity_channel(3)) < 1e-14
    e = group_average_expectation([np.eye(4), SWAP])
    half = from_mixture([(0.5, np.eye(4)), (0.5, SWAP)])
    assert superop_distance(e, half) < 1e-14
    perms = [np.eye(3)[list(p)] for p in [(0, 1, 2), (1, 0, 2), (0, 2, 1), (2, 1, 0), (1, 2, 0), (2, 0, 1)]]
    s3 = group_average_expectation(perms)
    assert s3.is_idempotent()
    assert np.linalg.matrix_rank(s3.superop, tol=1e-9) == 2
    assert np.allclose(s3(np.ones((3, 3))), np.ones((3, 3)))


def test_group_average_closure_error():
    with pytest.raises(ValidationError, match="product"):
        group_average_expectation([np.eye(2), H, Z])


def test_group_fixed_space_stable_under_conjugation():
    perms = [np.eye(3)[list(p)] for p in [(0, 1, 2), (1, 0, 2), (0, 2, 1), (2, 1, 0), (1, 2, 0), (2, 0, 1)]]
    u = random_unitary(3, 4)
    rot = group_average_expectation([u @ p @ u.conj().T for p in perms])
    assert np.linalg.matrix_rank(rot.superop, tol=1e-9) == 2


def test_apply_channel_examples():
    rho = random_density(3, "hilbert-schmidt", 1)
    assert np.allclose(apply_channel(identity_channel(3), rho), rho)
    assert np.allclose(apply_channel(scalar_expectation(3), rho), np.eye(3) / 3)
    mix = from_mixture([(0.5, np.eye(2)), (0.5, X)])
    assert np.allclose(apply_channel(mix, np.diag([1.0, 0])), np.eye(2) / 2)
    with pytest.raises(ValidationError):
        apply_channel(mix, np.eye(3) / 3)


def test_choi_examples():
    omega = np.zeros(4)
    omega[[0, 3]] = 1 / np.sqrt(2)
    assert np.allclose(choi_matrix(identity_channel(2)), np.outer(omega, omega))
    assert np.allclose(choi_matrix(scalar_expectation(2)), np.eye(4) / 4)
    assert np.allclose(choi_matrix(pinching_expectation(np.eye(2))), np.diag([0.5, 0, 0, 0.5]))


def test_from_choi_rejects_non_cp():
    j = choi_matrix(identity_channel(2)).copy()
    j[0, 0] = -0.1
    with pytest.raises(ValidationError):
        from_choi(j)


def test_representation_coherence():
    rng = np.random.default_rng(5)
    for s in range(50):
        d = 2 + s % 3
        ks = [rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d)) for _ in range(3)]
        m = sum(k.conj().T @ k for k in ks)
        w, v = np.linalg.eigh(m)
        s_half = v @ np.diag(w**-0.5) @ v.conj().T
        ks = [k @ s_half for k in ks]
        ch = from_kraus(ks)
        back = from_choi(ch.choi)
        rho = random_density(d, "hilbert-schmidt", rng)
        direct = sum(k @ rho @ k.conj().T for k in ks)
        assert np.allclose(ch(rho), direct, atol=1e-10)
        assert np.allclose(back(rho), direct, atol=1e-10)
        again = from_kraus(back.kraus_operators())
        assert np.allclose(again(rho), direct, atol=1e-10)


def test_compose_and_combine():
    e = pinching_expectation(random_unitary(3, 2))
    assert superop_distance(compose(e, e), e) < 1e-12
    assert superop_distance(convex_combine([(1.0, e)]), e) == 0
    mub = compose(pinching_expectation(np.eye(2)), pinching_expectation(H))
    assert choi_distance(mub, scalar_expectation(2)) < 1e-12
    with pytest.raises(ValidationError):
        convex_combine([(0.7, e), (0.7, e)])


def _expectations():
    yield pinching_expectation(random_unitary(3, 0))
    yield block_expectation(SubalgebraBlocks(random_unitary(5, 1), ((1, 2), (3, 1))))
    yield weighted_expectation(SubalgebraBlocks.standard([(2, 2)], [random_density(2, "hilbert-schmidt", 2)]))
    yield partial_trace_expectation([2, 3], [0])
    yield scalar_expectation(4)
    yield group_average_expectation([np.eye(2), X, Y, Z])


def test_all_constructors_idempotent():
    for e in _expectations():
        s = e.superop
        assert np.linalg.norm(s @ s - s, 2) < 1e-9


def test_block_expectation_self_adjoint():
    e = block_expectation(SubalgebraBlocks(random_unitary(5, 8), ((1, 2), (1, 1), (2, 1))))
    rng = np.random.default_rng(0)
    for _ in range(50):
        x = rng.standard_normal((5, 5)) + 1j * rng.standard_normal((5, 5))
        y = rng.standard_normal((5, 5)) + 1j * rng.standard_normal((5, 5))
        assert abs(np.trace(x.conj().T @ e(y)) - np.trace(e(x).conj().T @ y)) < 1e-9


def test_intersection_examples():
    e = pinching_expectation(np.eye(2))
    assert intersection_expectation([e]) is e
    dims = [2, 2, 2]
    ea = partial_trace_expectation(dims, [0])
    eb = partial_trace_expectation(dims, [1])
    eab = partial_trace_expectation(dims, [0, 1])
    assert superop_distance(intersection_expectation([ea, eb]), eab) < 1e-9
    inter = intersection_expectation([e, pinching_expectation(H)])
    assert superop_distance(inter, scalar_expectation(2)) < 1e-9


def test_commuting_square_gap():
    e = pinching_expectation(np.eye(3))
    assert commuting_square_gap(e, e)[0] < 1e-14
    dims = [2, 2, 2]
    gap, ok = commuting_square_gap(partial_trace_expectation(dims, [0]), partial_trace_expectation(dims, [1]))
    assert gap < 1e-12 and ok
    # MUB pinchings compose to the scalar expectation in either order, so they commute
    gap, ok = commuting_square_gap(pinching_expectation(np.eye(2)), pinching_expectation(H))
    assert gap < 1e-12 and ok
    c, s = np.cos(0.3), np.sin(0.3)
    rot = np.array([[c, -s], [s, c]])
    gap, ok = commuting_square_gap(pinching_expectation(np.eye(2)), pinching_expectation(rot))
    assert gap > 0.1 and not ok


def test_max_expectation_weight_examples():
    e = pinching_expectation(np.eye(3))
    w = max_expectation_weight(e, e)
    assert w.w_star == pytest.approx(1) and w.zeta_star == pytest.approx(0, abs=1e-12)
    mub = compose(pinching_expectation(np.eye(2)), pinching_expectation(H))
    assert max_expectation_weight(mub, scalar_expectation(2)).zeta_star < 1e-9


def test_max_expectation_weight_reconstruction():
    rng = np.random.default_rng(3)
    paulis = [np.eye(2), X, Y, Z]
    e = scalar_expectation(2)
    for _ in range(20):
        p = 0.25 + 0.2 * (rng.dirichlet(np.ones(4)) - 0.25)
        psi = from_mixture(list(zip(p, paulis)))
        w = max_expectation_weight(psi, e)
        assert w.zeta_star == pytest.approx(1 - 4 * p.min(), abs=1e-9)
        rebuilt = (1 - w.zeta_star) * e.superop + w.zeta_star * w.residual.superop
        assert np.linalg.norm(rebuilt - psi.superop) < 1e-9
        assert np.linalg.eigvalsh(w.residual.choi)[0] > -1e-9


def test_max_expectation_weight_requires_fixing():
    with pytest.raises(ValidationError):
        max_expectation_weight(pinching_expectation(H), pinching_expectation(np.eye(2)))


def test_near_zeta_phi_equals_e():
    e = pinching_expectation(np.eye(3))
    assert near_zeta_sufficient(e, e) == pytest.approx(0, abs=1e-12)


def test_near_zeta_depolarizing_example():
    # (1-s) depolarizing + s X-conjugation: optimum zeta_star = s
    s = 0.2
    phi = convex_combine([(1 - s, scalar_expectation(2)), (s, from_mixture([(1.0, X)]))])
    e = scalar_expectation(2)
    exact = max_expectation_weight(phi, e).zeta_star
    assert exact == pytest.approx(s, abs=1e-9)
    assert near_zeta_sufficient(phi, e) >= exact - 1e-9
    assert near_zeta_scalar_states(phi, 10_000, 0) <= 2 * s + 1e-9


def test_near_zeta_state_variant_is_not_certified():
    # positivity-only variant can undercut the completely positive optimum
    eps = 0.05
    p = [0.25 + eps, 0.25, 0.25, 0.25 - eps]
    phi = from_mixture(list(zip(p, [np.eye(2), X, Y, Z])))
    e = scalar_expectation(2)
    assert max_expectation_weight(phi, e).zeta_star == pytest.approx(4 * eps, abs=1e-9)
    assert near_zeta_scalar_states(phi, 4000, 1) <= 2 * eps + 1e-9
    assert near_zeta_sufficient(phi, e) >= 4 * eps - 1e-9


def test_near_zeta_pinching_dominates():
    rng = np.random.default_rng(9)
    d = 3
    z = np.diag(np.exp(2j * np.pi * np.arange(d) / d))
    e = pinching_expectation(np.eye(d))
    blocks = SubalgebraBlocks.standard([(1, 1)] * d)
    for _ in range(100):
        p = (1 - 0.3) / d + 0.3 * rng.dirichlet(np.ones(d))
        phi = from_mixture([(pk, np.linalg.matrix_power(z, k)) for k, pk in enumerate(p)])
        zs = max_expectation_weight(phi, e).zeta_star
        assert near_zeta_sufficient(phi, e, blocks) >= zs - 1e-9
        assert near_zeta_sufficient(phi, e) == pytest.approx(near_zeta_sufficient(phi, e, blocks))


def test_index_estimates():
    assert index_estimate(identity_channel(3), samples=200).lower_bound == pytest.approx(1)
    e = scalar_expectation(4)
    plain = index_estimate(e, samples=10_000, seed=0)
    assert 3.9 <= plain.lower_bound <= 4 + 1e-8
    ext = index_estimate(e, samples=10_000, extended=True, seed=0)
    assert 15.5 <= ext.lower_bound <= 16 + 1e-8


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 4), st.integers(0, 2**31))
def test_pinching_index_never_exceeds_d(d, seed):
    est = index_estimate(pinching_expectation(random_unitary(d, seed)), samples=500, seed=seed, climb_steps=20)
    assert est.lower_bound <= d + 1e-8
