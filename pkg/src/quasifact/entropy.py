"""Entropies, the inverse-weighted norm and related two-sided estimates.

All logarithms are natural. An infinite relative entropy is reported as
``math.inf``; callers compare and add it like any float.
"""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

from .channels import Channel
from .matcore import (
    DomainError,
    ValidationError,
    as_square,
    check_same_dim,
    support_mask,
)

INF = math.inf
CLAMP_TOL = 1e-9
KERNEL_SWITCH = 1e-8


def _eigh(a: np.ndarray):
    a = as_square(a)
    return np.linalg.eigh((a + a.conj().T) / 2)


def _xlogx(w: np.ndarray) -> float:
    w = w[support_mask(w)]
    w = w[w > 0]
    return float(np.sum(w * np.log(w)))


def _clamp(v: float) -> float:
    return 0.0 if -CLAMP_TOL <= v < 0 else v


def von_neumann_entropy(rho) -> float:
    w = np.linalg.eigvalsh(as_square(rho))
    return _clamp(-_xlogx(w))


def relative_entropy(rho, sigma) -> float:
    """Umegaki relative entropy tr rho (ln rho - ln sigma); ``inf`` off support."""
    rho, sigma = as_square(rho, "rho"), as_square(sigma, "sigma")
    check_same_dim(rho, sigma)
    w, v = _eigh(sigma)
    mask = support_mask(w)
    rt = v.conj().T @ rho @ v
    leak = np.real(np.trace(rt[np.ix_(~mask, ~mask)])) if (~mask).any() else 0.0
    if leak > 1e-10:
        return INF
    diag = np.real(np.diagonal(rt))[mask]
    cross = float(np.sum(diag * np.log(w[mask])))
    return _clamp(_xlogx(np.linalg.eigvalsh((rho + rho.conj().T) / 2)) - cross)


def divided_log_kernel(lam, mu):
    """(ln lam - ln mu)/(lam - mu), evaluated stably; accepts arrays."""
    lam = np.asarray(lam, dtype=float)
    mu = np.asarray(mu, dtype=float)
    if np.any(lam <= 0) or np.any(mu <= 0):
        raise DomainError("divided_log_kernel needs positive arguments")
    x = lam / mu - 1
    close = np.abs(lam - mu) < KERNEL_SWITCH * np.maximum(lam, mu)
    safe = np.where(close, 1.0, x)
    far = np.log1p(safe) / safe / mu
    out = np.where(close, 2 / (lam + mu), far)
    return float(out) if out.ndim == 0 else out


def _kernel_matrix(w: np.ndarray) -> np.ndarray:
    return divided_log_kernel(w[:, None], w[None, :])


def inv_weighted_norm_sq(x, rho) -> float:
    """||x||^2 weighted by the inverse of rho via the logarithmic divided difference.

    Equals the integral of tr(x^dag (rho+r)^-1 x (rho+r)^-1) over r >= 0.
    ``inf`` when x reaches outside the support of rho.
    """
    x, rho = as_square(x, "x"), as_square(rho, "rho")
    check_same_dim(x, rho)
    w, v = _eigh(rho)
    mask = support_mask(w)
    xt = v.conj().T @ x @ v
    scale = max(1.0, float(np.max(np.abs(xt))))
    outside = np.abs(xt[~mask, :]).max(initial=0), np.abs(xt[:, ~mask]).max(initial=0)
    if max(outside) > 1e-10 * scale:
        return INF
    ws = w[mask]
    xs = xt[np.ix_(mask, mask)]
    return float(np.sum(np.abs(xs) ** 2 * _kernel_matrix(ws)))


def _batched_inv_norm(x: np.ndarray, mats: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(mats)
    xt = np.einsum("nji,jk,nkl->nil", v.conj(), x, v)
    w = np.clip(w, 1e-300, None)
    ker = divided_log_kernel(w[:, :, None], w[:, None, :])
    return np.sum(np.abs(xt) ** 2 * ker, axis=(1, 2))


def _graded_nodes(grid: int, depth: int) -> tuple[np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre nodes on [0, 1], panels shrinking by 4x toward both ends."""
    x, w = np.polynomial.legendre.leggauss(max(8, grid // 8))
    half = [0.0] + [0.5 * 4.0 ** -k for k in range(depth, 0, -1)] + [0.5]
    edges = np.array(half[:-1] + [1 - e for e in half[::-1]])
    lo, hi = edges[:-1], edges[1:]
    nodes = ((hi - lo)[:, None] * (x + 1) / 2 + lo[:, None]).ravel()
    weights = ((hi - lo)[:, None] * w / 2).ravel()
    return nodes, weights


def relative_entropy_double_integral(rho, sigma, grid: int = 64) -> float:
    """D(rho||sigma) as the double integral of ||rho - sigma||^2 weighted by rho_t^-1.

    rho_t = (1-t) sigma + t rho, integrated over 0 <= t <= s <= 1. The inner
    integral is done exactly, leaving the weight (1 - t) on [0, 1]. That one is
    evaluated with composite Gauss-Legendre rules of grid/8 nodes on panels
    graded toward both ends down to the scale of the smallest eigenvalue, where
    the integrand varies fastest.
    """
    rho, sigma = as_square(rho, "rho"), as_square(sigma, "sigma")
    check_same_dim(rho, sigma)
    if grid < 8:
        raise ValidationError("grid must be at least 8")
    if not np.isfinite(relative_entropy(rho, sigma)):
        return INF
    diff = rho - sigma
    # restrict to supp(sigma), which contains every rho_t for t < 1
    w, v = _eigh(sigma)
    mask = support_mask(w)
    if not mask.all():
        vs = v[:, mask]
        diff = vs.conj().T @ diff @ vs
        rho, sigma = vs.conj().T @ rho @ vs, vs.conj().T @ sigma @ vs
    lam = np.concatenate([np.linalg.eigvalsh(sigma), np.linalg.eigvalsh((rho + rho.conj().T) / 2)])
    lam = lam[support_mask(lam)]
    depth = min(40, max(2, math.ceil(math.log(lam.max() / lam.min(), 4)) + 2))
    t, wts = _graded_nodes(grid, depth)
    mats = (1 - t)[:, None, None] * sigma[None] + t[:, None, None] * rho[None]
    mats = (mats + np.conj(np.swapaxes(mats, 1, 2))) / 2
    vals = _batched_inv_norm(diff, mats)
    return float(np.sum(wts * (1 - t) * vals))


def g_ratio(c: float) -> float:
    """(c-1)^2 / (c(ln c - 1) + 1), extended continuously by 2 at c = 1."""
    if c < 1:
        raise DomainError("g_ratio needs c >= 1")
    h = c - 1
    if abs(h) < 1e-4:
        # series of the denominator: h^2/2 - h^3/6 + h^4/12
        return 1 / (0.5 - h / 6 + h * h / 12)
    return h * h / (c * (math.log(c) - 1) + 1)


class Sandwich(NamedTuple):
    lower: float
    upper: float
    c: float


def keylem_sandwich(rho, sigma) -> Sandwich:
    """Two-sided bound lower <= D(rho||sigma) <= upper with c from rho <= c sigma."""
    rho, sigma = as_square(rho, "rho"), as_square(sigma, "sigma")
    check_same_dim(rho, sigma)
    w, v = _eigh(sigma)
    mask = support_mask(w)
    rt = v.conj().T @ rho @ v
    if (~mask).any() and np.trace(rt[np.ix_(~mask, ~mask)]).real > 1e-10:
        return Sandwich(INF, INF, INF)
    ws = w[mask]
    rs = rt[np.ix_(mask, mask)]
    s = 1 / np.sqrt(ws)
    c = max(1.0, float(np.linalg.eigvalsh(s[:, None] * rs * s[None, :])[-1]))
    ds = rs - np.diag(ws)
    upper = float(np.sum(np.abs(ds) ** 2 * _kernel_matrix(ws)))
    lower = upper / g_ratio(c)
    return Sandwich(lower, upper, c)


def _check_expectation(e: Channel, d: int) -> None:
    if e.dim != d:
        raise ValidationError(f"expectation acts on dimension {e.dim}, states have {d}")


def chain_rule_residual(rho, omega, e: Channel) -> float:
    """|D(rho||omega) - D(rho||E rho) - D(E rho||omega)| for omega fixed by E."""
    rho, omega = as_square(rho, "rho"), as_square(omega, "omega")
    check_same_dim(rho, omega)
    _check_expectation(e, rho.shape[0])
    if np.max(np.abs(e(omega) - omega)) > 1e-9:
        raise ValidationError("omega is not a fixed point of the expectation")
    er = e(rho)
    parts = relative_entropy(rho, omega), relative_entropy(rho, er), relative_entropy(er, omega)
    if not all(map(math.isfinite, parts)):
        if math.isinf(parts[0]) and (math.isinf(parts[1]) or math.isinf(parts[2])):
            return 0.0
        return INF
    return abs(parts[0] - parts[1] - parts[2])


def subadd_gap(rho, omega, e: Channel) -> float:
    """D(rho||E rho) + D(rho||omega) - D(rho||E omega)."""
    rho, omega = as_square(rho, "rho"), as_square(omega, "omega")
    check_same_dim(rho, omega)
    _check_expectation(e, rho.shape[0])
    lhs = relative_entropy(rho, e(rho)) + relative_entropy(rho, omega)
    rhs = relative_entropy(rho, e(omega))
    if math.isinf(lhs):
        return INF
    if math.isinf(rhs):
        return -INF
    return lhs - rhs


def cq_decomposition(probs, states, e: Channel) -> tuple[float, float]:
    """Both sides of D(rho||E rho) = sum_x p_x D(rho_x||E rho_x) for rho = sum p_x |x><x| kron rho_x.

    ``e`` acts on the quantum factor only. Test helper for classical-quantum
    inputs; returns (lhs, rhs).
    """
    probs = np.asarray(probs, dtype=float)
    k = len(probs)
    d = e.dim
    big = np.zeros((k * d, k * d), dtype=complex)
    ebig = np.zeros_like(big)
    rhs = 0.0
    for x, (p, s) in enumerate(zip(probs, states)):
        big[x * d:(x + 1) * d, x * d:(x + 1) * d] = p * s
        ebig[x * d:(x + 1) * d, x * d:(x + 1) * d] = p * e(s)
        if p > 0:
            rhs += p * relative_entropy(s, e(s))
    return relative_entropy(big, ebig), rhs
