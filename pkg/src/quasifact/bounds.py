"""Explicit constants and inequality checks for multiplicative entropy comparisons."""

from __future__ import annotations

import math
from collections import Counter
from typing import NamedTuple, Sequence

import numpy as np

from .channels import Channel, compose, convex_combine
from .entropy import g_ratio, relative_entropy
from .matcore import ValidationError, as_density, check_same_dim, loewner_leq
from .majorize import majorizes


def _unit_interval(name: str, x: float, lo_open=False, hi_open=False) -> None:
    lo_bad = x <= 0 if lo_open else x < 0
    hi_bad = x >= 1 if hi_open else x > 1
    if lo_bad or hi_bad or not math.isfinite(x):
        raise ValidationError(f"{name}={x!r} is out of range")


def tilde_zeta_admissible(d: int, a: float, b: float) -> float:
    """Largest mixing weight zeta for which the majorization comparison keeps factor 1 - a."""
    if d < 1:
        raise ValidationError("d must be positive")
    _unit_interval("a", a)
    _unit_interval("b", b, lo_open=True, hi_open=True)
    return a * min((1 - b) / (d + a * (1 - b) + 1), b / ((1 - a * b) * d + a * b + 1))


def approx_zeta_max(d: int) -> float:
    return 15 / (25 * d + 56)


def approx_beta(d: int, zeta: float) -> float:
    """Closed-form comparison factor 1 - 32(d+1)zeta/(15 + (7d-24)zeta)."""
    if zeta < 0 or zeta >= approx_zeta_max(d):
        raise ValidationError(f"zeta={zeta!r} must lie in [0, {approx_zeta_max(d)!r})")
    return 1 - 32 * (d + 1) * zeta / (15 + (7 * d - 24) * zeta)


def beta_c_zeta(c: float, zeta: float) -> float:
    """Multiplicative factor for D(rho||(1-zeta)E rho + zeta Phi rho) versus D(rho||E rho).

    May be nonpositive, in which case the comparison is vacuous.
    """
    if c < 1:
        raise ValidationError("c must be at least 1")
    if not 0 <= zeta < 1:
        raise ValidationError("zeta must lie in [0, 1)")
    num = 1 - 3 * zeta * (2 + zeta) * g_ratio(c) - 8 * zeta - 2 * zeta**2
    return num / (1 + zeta * (c + 1) + 2 * zeta**2 * (c - 1))


class RevconvSlack(NamedTuple):
    slack1: float
    slack2: float


def revconv_check(rho, sigma, omega, c: float, zeta: float) -> RevconvSlack:
    """Slacks of the two triangle-like comparisons of D(rho||sigma) and D(rho||omega).

    Requires (1-zeta) sigma <= omega <= (1 + zeta(c-1)) sigma.
    """
    rho, sigma, omega = (as_density(x, n) for x, n in ((rho, "rho"), (sigma, "sigma"), (omega, "omega")))
    check_same_dim(rho, sigma)
    check_same_dim(rho, omega)
    if c < 1:
        raise ValidationError("c must be at least 1")
    _unit_interval("zeta", zeta, lo_open=True, hi_open=True)
    if not loewner_leq((1 - zeta) * sigma, omega, 1e-9) or not loewner_leq(omega, (1 + zeta * (c - 1)) * sigma, 1e-9):
        raise ValidationError("omega is not sandwiched between (1-zeta) sigma and (1+zeta(c-1)) sigma")
    eta = (omega - (1 - zeta) * sigma) / zeta
    eta = as_density(eta, "eta", tol=1e-8)
    a = 1 + zeta * (c + 1) + 2 * zeta**2 * (c - 1)
    lhs = (1 - zeta) ** 2 * relative_entropy(rho, sigma)
    d_rw = relative_entropy(rho, omega)
    rhs1 = a * d_rw + zeta * (2 + zeta) * c * relative_entropy(rho, eta)
    rhs2 = a * d_rw + 3 * zeta * (2 + zeta) * (1 + g_ratio(c)) * relative_entropy(eta, sigma)
    return RevconvSlack(_diff(rhs1, lhs), _diff(rhs2, lhs))


def _diff(a: float, b: float) -> float:
    if math.isinf(a):
        return math.inf
    if math.isinf(b):
        return -math.inf
    return a - b


def ephi_constant(c: float, kappa: float, structured_b: float | None = None) -> float:
    """Coefficient a g(c)/kappa bounding D(rho||Phi rho) by D(rho||E rho).

    a is 4 in general and (1 + sqrt b)^2 when Phi = (1-b) E + b Phi_tilde.
    """
    if c < 1 or kappa <= 0:
        raise ValidationError("need c >= 1 and kappa > 0")
    if structured_b is None:
        a = 4.0
    else:
        _unit_interval("structured_b", structured_b)
        a = 1 + 2 * math.sqrt(structured_b) + structured_b
    return a * g_ratio(c) / kappa


class Schedule(NamedTuple):
    psi: Channel
    k_counts: tuple[int, ...]
    per_sequence: tuple[tuple[int, ...], ...]


def schedule_compose(es: Sequence[Channel], schedule: Sequence[tuple[float, Sequence[int]]]) -> Schedule:
    """Weighted sum of compositions along index sequences.

    A sequence (j1, ..., jm) stands for E_{j1} o ... o E_{jm}. ``k_counts[j]`` is
    the largest number of times index j occurs in any one sequence.
    """
    if not schedule:
        raise ValidationError("empty schedule")
    n = len(es)
    pairs, per_seq = [], []
    for w, seq in schedule:
        seq = list(seq)
        if not seq or any(not 0 <= j < n for j in seq):
            raise ValidationError(f"invalid index sequence {seq!r}")
        ch = es[seq[0]]
        for j in seq[1:]:
            ch = compose(ch, es[j])
        pairs.append((w, ch))
        cnt = Counter(seq)
        per_seq.append(tuple(cnt.get(j, 0) for j in range(n)))
    psi = convex_combine(pairs)
    k = tuple(max(row[j] for row in per_seq) for j in range(n))
    return Schedule(psi, k, tuple(per_seq))


class QfCertificate(NamedTuple):
    alpha: float
    epsilon_used: float
    power: int
    beta_used: float
    trivial: bool


def log_power(zeta: float, eps: float) -> int:
    """ceil(log_zeta eps), robust to eps being an exact power of zeta."""
    x = math.log(eps) / math.log(zeta)
    return max(1, math.ceil(x - 1e-9))


GRID_CAP = 20000


def default_epsilon_grid(c: float, zeta: float) -> list[float]:
    """Powers zeta^m reaching past both 1/c^2 and the scale where beta_{c,eps} is near 1.

    Beta stays positive only for eps of order 1/(c + 6 g(c) + 9), so for zeta
    close to 1 the 1/c^2 floor alone can leave every entry vacuous. Above
    GRID_CAP powers the exponents are log-spaced.
    """
    floor = min(1 / max(c, math.e) ** 2, 1e-3 / (c + 6 * g_ratio(c) + 9))
    top = math.ceil(math.log(floor) / math.log(zeta)) + 4
    if top <= GRID_CAP:
        powers = range(1, top + 1)
    else:
        powers = np.unique(np.round(np.geomspace(1, top, GRID_CAP)).astype(int))
    return [zeta ** int(m) for m in powers]


def qf_certificate(c: float, zeta: float, k_total: float = 1, epsilon_grid: Sequence[float] | None = None) -> QfCertificate:
    """Optimize alpha = k_total * ceil(log_zeta eps) / beta_{c,eps} over an epsilon grid.

    Iterating the schedule ``power`` times turns a zeta-mixture into an
    eps-mixture, after which the single-step comparison applies.
    """
    if c < 1:
        raise ValidationError("c must be at least 1")
    _unit_interval("zeta", zeta, lo_open=True, hi_open=True)
    grid = default_epsilon_grid(c, zeta) if epsilon_grid is None else list(epsilon_grid)
    if not grid:
        raise ValidationError("empty epsilon grid")
    best = None
    for eps in grid:
        if not 0 < eps <= zeta * (1 + 1e-12):
            raise ValidationError(f"grid entry {eps!r} must lie in (0, zeta]")
        power = log_power(zeta, eps)
        beta = beta_c_zeta(c, eps)
        if beta <= 0:
            continue
        alpha = k_total * power / beta
        if best is None or alpha < best.alpha:
            best = QfCertificate(alpha, eps, power, beta, False)
    if best is None:
        eps = min(grid)
        return QfCertificate(math.inf, eps, log_power(zeta, eps), beta_c_zeta(c, eps), True)
    return best


class ThmRelentSlack(NamedTuple):
    slack: float
    worstsig_slack: float
    zeta: float


def worstsig_slack(rho, sigma, zeta: float) -> float:
    """D(rho||(1-zeta)I/d + zeta sigma) - D(rho||(1-zeta)I/d + zeta rho)."""
    d = rho.shape[0]
    mix = (1 - zeta) * np.eye(d) / d
    return _diff(relative_entropy(rho, mix + zeta * sigma), relative_entropy(rho, mix + zeta * rho))


def thmrelent_check(rho, sigma, a: float = 0.5, b: float = 0.5) -> ThmRelentSlack:
    """Slack of D(rho||(1-zeta)I/d + zeta sigma) >= (1-a) D(rho||I/d) for rho majorizing sigma."""
    rho, sigma = as_density(rho, "rho"), as_density(sigma, "sigma")
    check_same_dim(rho, sigma)
    d = rho.shape[0]
    p = np.sort(np.linalg.eigvalsh(rho))[::-1]
    q = np.sort(np.linalg.eigvalsh(sigma))[::-1]
    if not majorizes(p, q):
        raise ValidationError("rho does not majorize sigma")
    zeta = tilde_zeta_admissible(d, a, b)
    eye = np.eye(d) / d
    lhs = relative_entropy(rho, (1 - zeta) * eye + zeta * sigma)
    slack = _diff(lhs, (1 - a) * relative_entropy(rho, eye))
    return ThmRelentSlack(slack, worstsig_slack(rho, sigma, zeta), zeta)
