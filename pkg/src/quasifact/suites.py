"""Randomized falsification suites, one per inequality.

Each trial draws its own generator from (seed, suite, dim, trial), evaluates
a slack that must be nonnegative, and hashes its inputs into a short digest
so a failing instance can be regenerated.
"""

from __future__ import annotations

import hashlib
import math
import zlib
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, NamedTuple

import numpy as np
from scipy.optimize import brentq

from .bounds import beta_c_zeta, ephi_constant, revconv_check, thmrelent_check, worstsig_slack
from .channels import (
    SubalgebraBlocks,
    from_mixture,
    max_expectation_weight,
    near_zeta_sufficient,
    partial_trace_expectation,
    pinching_expectation,
    scalar_expectation,
)
from .entropy import (
    chain_rule_residual,
    inv_weighted_norm_sq,
    keylem_sandwich,
    relative_entropy,
    relative_entropy_double_integral,
    subadd_gap,
    von_neumann_entropy,
)
from .majorize import cascade_redistribute, flatten_step_delta
from .matcore import loewner_ratio, partial_trace, random_density, random_unitary
from .uncertainty import fourier_pair, qf_uncertainty_bound


class Trial(NamedTuple):
    slack: float
    inputs: tuple


@dataclass(frozen=True)
class Suite:
    name: str
    run: Callable[[int, np.random.Generator], Trial]
    summary: str
    min_dim: int = 2


@dataclass
class SuiteResult:
    suite: str
    dim: int
    trials: int
    violations: list = field(default_factory=list)
    max_violation: float = 0.0
    min_slack: float = math.inf


def digest(inputs: tuple) -> str:
    h = hashlib.sha256()
    for x in inputs:
        a = np.asarray(x)
        if np.iscomplexobj(a):
            a = np.stack([a.real, a.imag])
        h.update(np.round(np.asarray(a, dtype=float), 12).tobytes())
    return h.hexdigest()[:16]


def trial_rng(seed: int, suite: str, dim: int, trial: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), zlib.crc32(suite.encode()), int(dim), int(trial)]))


def _state(d: int, rng, kinds=("hilbert-schmidt", "rank-k", "pure")) -> np.ndarray:
    kind = kinds[int(rng.integers(len(kinds)))]
    return random_density(d, kind, rng)


def _full(d: int, rng) -> np.ndarray:
    return random_density(d, "hilbert-schmidt", rng)


def _random_pinching(d: int, rng):
    return pinching_expectation(random_unitary(d, rng))


def _unitary_mixture(d: int, rng, n: int | None = None):
    n = n or int(rng.integers(1, 5))
    p = rng.dirichlet(np.ones(n))
    return from_mixture([(float(pk), random_unitary(d, rng)) for pk in p])


def _clock(d: int) -> np.ndarray:
    return np.diag(np.exp(2j * np.pi * np.arange(d) / d))


def _shift(d: int) -> np.ndarray:
    return np.roll(np.eye(d), 1, axis=0).astype(complex)


def _weyl(d: int) -> list[np.ndarray]:
    x, z = _shift(d), _clock(d)
    return [np.linalg.matrix_power(x, a) @ np.linalg.matrix_power(z, b) for a in range(d) for b in range(d)]


def _near_uniform(k: int, zeta: float, rng) -> np.ndarray:
    return (1 - zeta) / k + zeta * rng.dirichlet(np.ones(k))


@lru_cache(maxsize=None)
def _zeta_root(c: float) -> float:
    """Largest zeta with beta_{c,zeta} > 0."""
    return brentq(lambda z: beta_c_zeta(c, z), 1e-12, 1 - 1e-12)


def _family(d: int, kind: str):
    """(expectation, group unitaries, blocks, index bound c) for a named family."""
    if kind == "scalar":
        return scalar_expectation(d), _weyl(d), SubalgebraBlocks.standard([(1, d)]), float(d * d)
    if kind == "pinching":
        z = _clock(d)
        return (pinching_expectation(np.eye(d)), [np.linalg.matrix_power(z, k) for k in range(d)],
                SubalgebraBlocks.standard([(1, 1)] * d), float(d))
    if kind == "partial-trace":
        # tr over the second factor of C^2 kron C^d
        units = [np.kron(np.eye(2), w) for w in _weyl(d)]
        return (partial_trace_expectation([2, d], [1]), units,
                SubalgebraBlocks.standard([(2, d)]), float(d * min(2, d)))
    raise KeyError(kind)


_cached_family = lru_cache(maxsize=None)(_family)
FAMILIES = ("scalar", "pinching", "partial-trace")


# -- suites -----------------------------------------------------------------------


def _ssa(d, rng):
    dims = [2, d, 2]
    rho = _state(4 * d, rng)
    h = lambda keep: von_neumann_entropy(partial_trace(rho, dims, keep))
    slack = h([0, 2]) + h([1, 2]) - von_neumann_entropy(rho) - h([2])
    return Trial(slack, (rho,))


def _subadd(d, rng):
    rho, omega = _state(d, rng), _full(d, rng)
    e = _random_pinching(d, rng)
    return Trial(subadd_gap(rho, omega, e), (rho, omega, e.superop))


def _chain(d, rng):
    rho = _state(d, rng)
    e = _random_pinching(d, rng)
    omega = e(_full(d, rng))
    return Trial(-chain_rule_residual(rho, omega, e), (rho, omega, e.superop))


def _keylem(d, rng):
    rho, sigma = _state(d, rng), _full(d, rng)
    s = keylem_sandwich(rho, sigma)
    dv = relative_entropy(rho, sigma)
    return Trial(min(dv - s.lower, s.upper - dv), (rho, sigma))


def _normform(d, rng, grid: int = 128):
    rho, sigma = _full(d, rng), _full(d, rng)
    dv = relative_entropy(rho, sigma)
    err = abs(relative_entropy_double_integral(rho, sigma, grid) - dv)
    return Trial(1e-6 * dv - err, (rho, sigma))


def _wnorm(d, rng):
    """Relative slacks of the triangle inequality, homogeneity and the Loewner comparison."""
    rho, sigma = _full(d, rng), _full(d, rng)
    x = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    y = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    a = complex(rng.standard_normal(), rng.standard_normal())
    nx, ny, nxy = (inv_weighted_norm_sq(m, rho) for m in (x, y, x + y))
    tri = (math.sqrt(nx) + math.sqrt(ny) - math.sqrt(nxy)) / max(1.0, math.sqrt(nxy))
    scaled = abs(a) ** 2 * nx
    homog = -abs(inv_weighted_norm_sq(a * x, rho) - scaled) / max(1.0, scaled)
    c = loewner_ratio(rho, sigma)
    ns = inv_weighted_norm_sq(x, sigma)
    comp = (c * nx - ns) / max(1.0, ns)
    return Trial(min(tri, homog, comp), (rho, sigma, x, y, np.array([a])))


def _dataproc(d, rng):
    rho, sigma = _state(d, rng), _full(d, rng)
    phi = _unitary_mixture(d, rng)
    return Trial(relative_entropy(rho, sigma) - relative_entropy(phi(rho), phi(sigma)),
                 (rho, sigma, phi.superop))


def _thmrelent(d, rng):
    rho, sigma = random_density(d, "majorized-pair", rng)
    a = float(rng.uniform(0.05, 1))
    b = float(rng.uniform(0.05, 0.95))
    return Trial(thmrelent_check(rho, sigma, a, b).slack, (rho, sigma, np.array([a, b])))


def _worstsig(d, rng):
    rho, sigma = random_density(d, "majorized-pair", rng)
    zeta = float(rng.uniform(0, 1))
    return Trial(worstsig_slack(rho, sigma, zeta), (rho, sigma, np.array([zeta])))


def _flatten(d, rng):
    """Replay the cascade from rho^zeta to sigma^zeta; every move must raise D(rho||.)."""
    p = np.sort(rng.dirichlet(np.ones(d) * 0.7))[::-1]
    mix = rng.dirichlet(np.ones(d))
    q = np.sort(sum(w * rng.permutation(p) for w in mix))[::-1]
    zeta = float(rng.uniform(0.05, 0.95))
    src = (1 - zeta) / d + zeta * p
    dst = (1 - zeta) / d + zeta * q
    cur = src.copy()
    slack = math.inf
    for mv in cascade_redistribute(src, dst):
        if mv.delta >= cur[mv.from_index]:
            return Trial(-math.inf, (p, q, np.array([zeta])))
        step = flatten_step_delta(p, cur, mv.from_index, mv.to_index, mv.delta)
        nxt = cur.copy()
        nxt[mv.from_index] -= mv.delta
        nxt[mv.to_index] += mv.delta
        direct = float(np.sum(p * (np.log(cur) - np.log(nxt))))
        slack = min(slack, step, -abs(step - direct))
        cur = nxt
    final = float(np.sum(p * (np.log(src) - np.log(dst))))
    slack = min(slack, final)
    return Trial(slack if math.isfinite(slack) else 0.0, (p, q, np.array([zeta])))


def _revconv(d, rng):
    rho, sigma, eta = _state(d, rng), _full(d, rng), _state(d, rng, ("hilbert-schmidt", "rank-k"))
    zeta = float(rng.uniform(0.001, 0.6))
    c = loewner_ratio(eta, sigma)
    omega = (1 - zeta) * sigma + zeta * eta
    s = revconv_check(rho, sigma, omega, c, zeta)
    return Trial(min(s.slack1, s.slack2), (rho, sigma, eta, np.array([zeta])))


def _corsimpleg(d, rng):
    kind = "pinching" if d % 2 or rng.random() < 0.5 else "partial-trace"
    e, units, _, c = _cached_family(d, kind)
    zeta0 = float(rng.uniform(0, 0.999)) * _zeta_root(c)
    p = _near_uniform(len(units), zeta0, rng)
    psi = from_mixture(list(zip(p, units)))
    zeta = max_expectation_weight(psi, e).zeta_star
    rho = _state(e.dim, rng)
    beta = beta_c_zeta(c, min(zeta, 1 - 1e-12))
    return Trial(relative_entropy(rho, psi(rho)) - beta * relative_entropy(rho, e(rho)), (rho, p))


def _min_ratio(a: np.ndarray, b: np.ndarray) -> float:
    wb, vb = np.linalg.eigh(b)
    s = vb / np.sqrt(wb)
    return float(np.linalg.eigvalsh(s.conj().T @ a @ s)[0])


def _ephi(d, rng):
    """Phi = (1-b) E + b Phi_tilde with Phi_tilde a mixture of diagonal phases, E the pinching."""
    e = pinching_expectation(np.eye(d))
    b = float(rng.uniform(0, 1))
    phases = [np.diag(np.exp(1j * rng.uniform(0, 2 * np.pi, d))) for _ in range(int(rng.integers(1, 4)))]
    w = rng.dirichlet(np.ones(len(phases)))
    pairs = [((1 - b) / d, np.linalg.matrix_power(_clock(d), k)) for k in range(d)]
    pairs += [(b * float(wk), u) for wk, u in zip(w, phases)]
    phi = from_mixture(pairs)
    rho = _full(d, rng)
    er, pr = e(rho), phi(rho)
    d_re = relative_entropy(rho, er)
    if relative_entropy(pr, er) > d_re:
        # hypothesis of the comparison fails; nothing to test on this draw
        return Trial(0.0, (rho,))
    c = max(loewner_ratio(rho, er), loewner_ratio(pr, er), 1.0 + 1e-12)
    kappa = _min_ratio(pr, er)
    bound = min(ephi_constant(c, kappa), ephi_constant(c, kappa, b))
    return Trial(bound * d_re - relative_entropy(rho, pr), (rho, np.array([b]), *phases))


def _near(d, rng, trial_kind: str | None = None):
    kind = trial_kind or FAMILIES[int(rng.integers(3))]
    e, units, blocks, _ = _cached_family(d, kind)
    p = _near_uniform(len(units), float(rng.uniform(0, 0.5)), rng)
    phi = from_mixture(list(zip(p, units)))
    z_star = max_expectation_weight(phi, e).zeta_star
    return Trial(near_zeta_sufficient(phi, e, blocks) - z_star, (p,))


def _qf_mub(d, rng):
    r = int(rng.integers(1, 3))
    rho = _state(d * r, rng)
    q = qf_uncertainty_bound(rho, fourier_pair(d))
    return Trial(q.lhs - q.rhs, (rho,))


SUITES: dict[str, Suite] = {s.name: s for s in (
    Suite("ssa", _ssa, "H(AC) + H(BC) >= H(ABC) + H(C) on C^2 kron C^d kron C^2"),
    Suite("subadd", _subadd, "D(rho||E rho) + D(rho||omega) >= D(rho||E omega)"),
    Suite("chain", _chain, "D(rho||omega) = D(rho||E rho) + D(E rho||omega) for E omega = omega"),
    Suite("keylem", _keylem, "two-sided norm sandwich of D(rho||sigma)"),
    Suite("normform", _normform, "double-integral form of D(rho||sigma), relative error 1e-6"),
    Suite("wnorm-triangle", _wnorm, "norm axioms and Loewner comparison of the inverse-weighted norm"),
    Suite("dataproc", _dataproc, "D(Phi rho||Phi sigma) <= D(rho||sigma) for unitary mixtures"),
    Suite("thmrelent", _thmrelent, "majorization comparison against the maximally mixed state"),
    Suite("worstsig", _worstsig, "rho is the worst sigma it majorizes"),
    Suite("flatten", _flatten, "cascade moves never decrease D(rho||.)"),
    Suite("revconv", _revconv, "both comparisons of D(rho||sigma) and D(rho||omega)"),
    Suite("corsimpleg", _corsimpleg, "D(rho||Psi rho) >= beta_{c,zeta} D(rho||E rho) for group mixtures"),
    Suite("ephi", _ephi, "D(rho||Phi rho) <= a g(c)/kappa D(rho||E rho)"),
    Suite("near", _near, "Choi-distance sufficient zeta dominates the optimal zeta"),
    Suite("qf-mub", _qf_mub, "MUB pinchings give SSA-strength quasi-factorization"),
)}


def run_suite(name: str, dim: int, trials: int, seed: int = 0, tol: float = 1e-8) -> SuiteResult:
    """Run ``trials`` instances of a suite; a slack below -tol is a violation."""
    if name not in SUITES:
        raise KeyError(name)
    suite = SUITES[name]
    if dim < suite.min_dim:
        raise ValueError(f"suite {name} needs dim >= {suite.min_dim}")
    res = SuiteResult(name, dim, trials)
    for t in range(trials):
        rng = trial_rng(seed, name, dim, t)
        try:
            tr = suite.run(dim, rng)
            slack, inputs = float(tr.slack), tr.inputs
        except (ValueError, np.linalg.LinAlgError) as exc:
            slack, inputs = -math.inf, (np.array([seed, dim, t]),)
            res.violations.append({"suite": name, "instance": digest(inputs), "slack": slack,
                                   "trial": t, "error": str(exc)})
            res.max_violation = math.inf
            res.min_slack = -math.inf
            continue
        res.min_slack = min(res.min_slack, slack)
        res.max_violation = max(res.max_violation, -slack)
        if slack < -tol:
            res.violations.append({"suite": name, "instance": digest(inputs), "slack": slack, "trial": t})
    return res
