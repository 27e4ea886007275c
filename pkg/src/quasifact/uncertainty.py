"""Entropic uncertainty bounds for a pair of orthonormal bases."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .bounds import QfCertificate, beta_c_zeta, log_power, qf_certificate
from .channels import _check_unitary
from .entropy import relative_entropy
from .matcore import ValidationError, as_density, partial_trace


@dataclass(frozen=True, eq=False)
class BasisPair:
    """Two orthonormal bases of C^d, stored as the columns of unitaries S and T."""

    S: np.ndarray
    T: np.ndarray

    def __post_init__(self):
        s = _check_unitary(self.S, "S")
        t = _check_unitary(self.T, "T")
        if s.shape != t.shape:
            raise ValidationError("bases must have equal dimension")
        object.__setattr__(self, "S", s)
        object.__setattr__(self, "T", t)

    @property
    def dim(self) -> int:
        return self.S.shape[0]

    def overlaps(self) -> np.ndarray:
        """Matrix of |<i_S|j_T>|^2."""
        return np.abs(self.S.conj().T @ self.T) ** 2


def fourier_matrix(d: int) -> np.ndarray:
    k = np.arange(d)
    return np.exp(2j * np.pi * np.outer(k, k) / d) / np.sqrt(d)


def fourier_pair(d: int) -> BasisPair:
    """Computational basis against the discrete Fourier basis (mutually unbiased)."""
    return BasisPair(np.eye(d, dtype=complex), fourier_matrix(d))


def rotated_pair(theta: float, d: int = 2) -> BasisPair:
    """Computational basis against a rotated copy.

    For d = 2 the rotation is the real matrix [[cos t/2, -sin t/2], [sin t/2, cos t/2]],
    so theta = pi/2 gives a mutually unbiased pair. For d > 2 it is the
    fractional Fourier power F^(2 theta/pi), which also reaches F at pi/2.
    """
    if d == 2:
        c, s = math.cos(theta / 2), math.sin(theta / 2)
        return BasisPair(np.eye(2, dtype=complex), np.array([[c, -s], [s, c]], dtype=complex))
    w, v = np.linalg.eig(fourier_matrix(d))
    # F is unitary with eigenvalues in {1, i, -1, -i}; orthonormalize each eigenspace
    phases = np.round(np.angle(w) / (np.pi / 2)).astype(int) % 4
    cols, powers = [], []
    for ph in range(4):
        sel = v[:, phases == ph]
        if sel.shape[1]:
            q, _ = np.linalg.qr(sel)
            cols.append(q)
            powers += [ph] * q.shape[1]
    v = np.hstack(cols)
    lam = np.exp(1j * (np.pi / 2) * np.array(powers) * (2 * theta / np.pi))
    return BasisPair(np.eye(d, dtype=complex), (v * lam) @ v.conj().T)


def basis_overlap_xi(bp: BasisPair) -> float:
    return float(bp.overlaps().min())


def _pinch(basis: np.ndarray, rho: np.ndarray, d: int) -> np.ndarray:
    """(E_basis kron id_B)(rho), dephasing the first factor in the given basis."""
    r = rho.shape[0] // d
    u = np.kron(basis, np.eye(r))
    rot = (u.conj().T @ rho @ u).reshape(d, r, d, r)
    out = np.zeros_like(rot)
    for i in range(d):
        out[i, :, i, :] = rot[i, :, i, :]
    out = out.reshape(d * r, d * r)
    return u @ out @ u.conj().T


def _two_basis_lhs(rho: np.ndarray, bp: BasisPair) -> float:
    d = bp.dim
    return relative_entropy(rho, _pinch(bp.S, rho, d)) + relative_entropy(rho, _pinch(bp.T, rho, d))


def _check_state(rho, bp: BasisPair) -> np.ndarray:
    rho = as_density(rho)
    if rho.shape[0] % bp.dim:
        raise ValidationError(f"state dimension {rho.shape[0]} is not a multiple of {bp.dim}")
    return rho


class BoundPair(NamedTuple):
    lhs: float
    rhs: float


def maassen_uffink_bound(rho, bp: BasisPair) -> BoundPair:
    """lhs = D(rho||E_S rho) + D(rho||E_T rho) against D(rho||I/d) - ln(d max overlap)."""
    rho = _check_state(rho, bp)
    d = bp.dim
    if rho.shape[0] != d:
        raise ValidationError("maassen_uffink_bound takes a state on the basis system only")
    rhs = relative_entropy(rho, np.eye(d) / d) - math.log(d * bp.overlaps().max())
    return BoundPair(_two_basis_lhs(rho, bp), rhs)


def bardet_coefficient(bp: BasisPair) -> float:
    d = bp.dim
    return 1 - 2 * d * float(np.abs(bp.overlaps() - 1 / d).max())


def bardet_bound(rho, bp: BasisPair) -> BoundPair:
    """lhs against (1 - 2d max| |<i|j>|^2 - 1/d |) D(rho||I/d); the raw coefficient may be negative."""
    rho = _check_state(rho, bp)
    d = bp.dim
    if rho.shape[0] != d:
        raise ValidationError("bardet_bound takes a state on the basis system only")
    rhs = bardet_coefficient(bp) * relative_entropy(rho, np.eye(d) / d)
    return BoundPair(_two_basis_lhs(rho, bp), rhs)


class QfUncertainty(NamedTuple):
    lhs: float
    rhs: float
    cert: QfCertificate


def qf_uncertainty_certificate(bp: BasisPair, b_dim: int = 1, epsilon: float | None = None,
                               c: float | None = None) -> QfCertificate:
    """Certificate for alpha (lhs) >= D(rho||I/d kron rho_B) with zeta = 1 - d xi."""
    d = bp.dim
    xi = basis_overlap_xi(bp)
    if xi <= 1e-14:
        raise ValidationError("bases share a vector (xi = 0); the intersection algebra is not the scalars")
    zeta = max(0.0, 1 - d * xi)
    if c is None:
        c = float(d * d if b_dim > 1 else d)
    if zeta <= 1e-12:
        return QfCertificate(1.0, 0.0, 1, 1.0, False)
    if epsilon is None:
        return qf_certificate(c, zeta, 1)
    if not 0 < epsilon <= zeta * (1 + 1e-12):
        raise ValidationError(f"epsilon must lie in (0, zeta={zeta!r}]")
    power = log_power(zeta, epsilon)
    beta = beta_c_zeta(c, epsilon)
    if beta <= 0:
        return QfCertificate(math.inf, epsilon, power, beta, True)
    return QfCertificate(power / beta, epsilon, power, beta, False)


def qf_uncertainty_bound(rho, bp: BasisPair, epsilon: float | None = None, c: float | None = None) -> QfUncertainty:
    """Quasi-factorization bound lhs >= (beta/power) D(rho||I/d kron rho_B).

    ``rho`` lives on C^d kron C^|B|; |B| is inferred from its size. Without
    ``epsilon`` the default grid of :func:`quasifact.bounds.qf_certificate` is
    searched.
    """
    rho = _check_state(rho, bp)
    d = bp.dim
    r = rho.shape[0] // d
    cert = qf_uncertainty_certificate(bp, r, epsilon, c)
    lhs = _two_basis_lhs(rho, bp)
    if cert.trivial:
        return QfUncertainty(lhs, 0.0, cert)
    rho_b = partial_trace(rho, [d, r], [1])
    target = relative_entropy(rho, np.kron(np.eye(d) / d, rho_b))
    return QfUncertainty(lhs, target / cert.alpha, cert)
