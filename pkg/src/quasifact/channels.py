"""Quantum channels, conditional expectations and Choi-matrix analysis.

Channels are stored as superoperators acting on row-major vectorizations,
``vec(A X B) = (A kron B^T) vec(X)``, so ``X -> U X U^dag`` is ``kron(U, conj(U))``
and composition is a matrix product. Kraus, Choi and unitary-mixture forms are
converted to and from this canonical form.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .matcore import (
    ConvergenceError,
    ValidationError,
    as_density,
    as_square,
    rng_from,
    support_mask,
)

IDEMPOTENT_TOL = 1e-9
GROUP_TOL = 1e-10


def _superop_to_choi(s: np.ndarray, d: int) -> np.ndarray:
    return s.reshape(d, d, d, d).transpose(0, 2, 1, 3).reshape(d * d, d * d) / d


def _choi_to_superop(j: np.ndarray, d: int) -> np.ndarray:
    return (d * j).reshape(d, d, d, d).transpose(0, 2, 1, 3).reshape(d * d, d * d)


@dataclass(frozen=True, eq=False)
class Channel:
    """A linear map on d x d matrices held as a d^2 x d^2 superoperator.

    ``kraus`` and ``mixture`` keep the representation the channel was built
    from, when there is one.
    """

    superop: np.ndarray
    dim: int
    kraus: tuple | None = field(default=None, repr=False)
    mixture: tuple | None = field(default=None, repr=False)

    def __call__(self, rho: np.ndarray) -> np.ndarray:
        d = self.dim
        return (self.superop @ np.asarray(rho, dtype=complex).reshape(d * d)).reshape(d, d)

    @property
    def choi(self) -> np.ndarray:
        return _superop_to_choi(self.superop, self.dim)

    def kraus_operators(self, tol: float = 1e-12) -> list[np.ndarray]:
        if self.kraus is not None:
            return list(self.kraus)
        d = self.dim
        w, v = np.linalg.eigh(d * self.choi)
        keep = w > tol * max(w[-1], 1e-300)
        return [np.sqrt(lam) * v[:, k].reshape(d, d) for lam, k in zip(w[keep], np.flatnonzero(keep))]

    def adjoint(self) -> "Channel":
        """Hilbert-Schmidt adjoint map."""
        return Channel(self.superop.conj().T, self.dim)

    def is_idempotent(self, tol: float = IDEMPOTENT_TOL) -> bool:
        s = self.superop
        return bool(np.linalg.norm(s @ s - s, 2) < tol)

    def is_unital(self, tol: float = 1e-10) -> bool:
        eye = np.eye(self.dim, dtype=complex)
        return bool(np.max(np.abs(self(eye) - eye)) < tol)

    def is_trace_preserving(self, tol: float = 1e-10) -> bool:
        return bool(np.max(np.abs(self.adjoint()(np.eye(self.dim)) - np.eye(self.dim))) < tol)

    def is_self_adjoint(self, tol: float = IDEMPOTENT_TOL) -> bool:
        return bool(np.max(np.abs(self.superop - self.superop.conj().T)) < tol)

    def tensor_identity(self, r: int) -> "Channel":
        """The map Phi kron id_r acting on (d r) x (d r) matrices."""
        d = self.dim
        s4 = self.superop.reshape(d, d, d, d)
        eye = np.eye(r)
        big = np.einsum("abcd,xX,yY->axbycXdY", s4, eye, eye)
        return Channel(big.reshape((d * r) ** 2, (d * r) ** 2), d * r)


# -- constructors for plain channels ---------------------------------------


def from_superop(s, dim: int | None = None) -> Channel:
    s = as_square(s, "superoperator")
    d = int(round(np.sqrt(s.shape[0]))) if dim is None else dim
    if d * d != s.shape[0]:
        raise ValidationError(f"superoperator side {s.shape[0]} is not a square number")
    return Channel(s, d)


def from_kraus(kraus: Sequence[np.ndarray], tol: float = 1e-10) -> Channel:
    ks = [as_square(k, "Kraus operator") for k in kraus]
    if not ks:
        raise ValidationError("empty Kraus list")
    d = ks[0].shape[0]
    if any(k.shape != (d, d) for k in ks):
        raise ValidationError("Kraus operators must share one square shape")
    completeness = sum(k.conj().T @ k for k in ks)
    if np.max(np.abs(completeness - np.eye(d))) > tol:
        raise ValidationError("Kraus operators are not trace preserving (sum K^dag K != I)")
    s = sum(np.kron(k, k.conj()) for k in ks)
    return Channel(s, d, kraus=tuple(ks))


def from_choi(j, tol: float = 1e-10) -> Channel:
    """Channel from a trace-one Choi matrix J = (Phi kron id)(|Omega><Omega|)."""
    j = as_square(j, "Choi matrix")
    d = int(round(np.sqrt(j.shape[0])))
    if d * d != j.shape[0]:
        raise ValidationError("Choi matrix side must be a square number")
    if np.max(np.abs(j - j.conj().T)) > tol:
        raise ValidationError("Choi matrix is not Hermitian")
    if abs(np.trace(j).real - 1) > tol:
        raise ValidationError("Choi matrix must have trace 1")
    if np.linalg.eigvalsh((j + j.conj().T) / 2)[0] < -tol:
        raise ValidationError("Choi matrix is not positive semidefinite")
    part = np.trace(j.reshape(d, d, d, d), axis1=0, axis2=2)
    if np.max(np.abs(part - np.eye(d) / d)) > tol:
        raise ValidationError("Choi matrix does not describe a trace-preserving map")
    return Channel(_choi_to_superop((j + j.conj().T) / 2, d), d)


def unitary_channel(u) -> Channel:
    u = as_square(u, "unitary")
    return Channel(np.kron(u, u.conj()), u.shape[0])


def from_mixture(pairs: Sequence[tuple[float, np.ndarray]], tol: float = 1e-12) -> Channel:
    """Weighted unitary mixture rho -> sum_i p_i u_i rho u_i^dag."""
    if not pairs:
        raise ValidationError("empty unitary mixture")
    p = np.array([w for w, _ in pairs], dtype=float)
    if np.any(p < 0) or abs(p.sum() - 1) > tol:
        raise ValidationError(f"mixture weights must be a probability vector (sum {p.sum()!r})")
    us = [_check_unitary(u) for _, u in pairs]
    s = sum(w * np.kron(u, u.conj()) for w, u in zip(p, us))
    return Channel(s, us[0].shape[0], mixture=tuple(zip(p.tolist(), us)))


def identity_channel(d: int) -> Channel:
    return Channel(np.eye(d * d, dtype=complex), d)


def scalar_expectation(d: int) -> Channel:
    """rho -> tr(rho) I/d, the expectation onto the scalar algebra."""
    eye = np.eye(d).reshape(d * d)
    return Channel(np.outer(eye, eye).astype(complex) / d, d)


def superop_from_map(f: Callable[[np.ndarray], np.ndarray], d: int) -> np.ndarray:
    s = np.zeros((d * d, d * d), dtype=complex)
    for k in range(d):
        for l in range(d):
            unit = np.zeros((d, d), dtype=complex)
            unit[k, l] = 1
            s[:, k * d + l] = np.asarray(f(unit)).reshape(d * d)
    return s


def _check_unitary(u, name: str = "basis", tol: float = 1e-10) -> np.ndarray:
    u = as_square(u, name)
    if np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))) > tol:
        raise ValidationError(f"{name} is not unitary")
    return u


# -- conditional expectations ----------------------------------------------


@dataclass(frozen=True, eq=False)
class SubalgebraBlocks:
    """Block structure V (sum_l M_{a_l} kron 1_{b_l}) V^dag of a subalgebra.

    In the rotated basis (columns of ``basis_change``) block l occupies a
    contiguous range of a_l*b_l indices, ordered as (retained, traced).
    """

    basis_change: np.ndarray
    blocks: tuple[tuple[int, int], ...]
    weights: tuple[np.ndarray, ...] | None = None

    def __post_init__(self):
        v = _check_unitary(self.basis_change, "basis_change")
        object.__setattr__(self, "basis_change", v)
        blocks = tuple((int(a), int(b)) for a, b in self.blocks)
        if not blocks or any(a < 1 or b < 1 for a, b in blocks):
            raise ValidationError("blocks must be a non-empty list of positive (a, b) pairs")
        if sum(a * b for a, b in blocks) != v.shape[0]:
            raise ValidationError(
                f"block dimensions sum to {sum(a * b for a, b in blocks)}, ambient dimension is {v.shape[0]}"
            )
        object.__setattr__(self, "blocks", blocks)
        if self.weights is not None:
            if len(self.weights) != len(blocks):
                raise ValidationError("one weight density per block is required")
            ws = []
            for (a, b), w in zip(blocks, self.weights):
                w = as_density(w, "block weight")
                if w.shape != (b, b):
                    raise ValidationError(f"block weight must be {b}x{b}")
                ws.append(w)
            object.__setattr__(self, "weights", tuple(ws))

    @property
    def dim(self) -> int:
        return self.basis_change.shape[0]

    @classmethod
    def standard(cls, blocks, weights=None) -> "SubalgebraBlocks":
        d = sum(a * b for a, b in blocks)
        return cls(np.eye(d, dtype=complex), tuple(blocks), weights)


def _blockwise_map(blocks: SubalgebraBlocks, weighted: bool) -> Callable[[np.ndarray], np.ndarray]:
    v = blocks.basis_change

    def apply(x: np.ndarray) -> np.ndarray:
        xr = v.conj().T @ x @ v
        out = np.zeros_like(xr)
        off = 0
        for idx, (a, b) in enumerate(blocks.blocks):
            n = a * b
            blk = xr[off:off + n, off:off + n].reshape(a, b, a, b)
            red = np.trace(blk, axis1=1, axis2=3)
            fill = blocks.weights[idx] if weighted else np.eye(b) / b
            out[off:off + n, off:off + n] = np.kron(red, fill)
            off += n
        return v @ out @ v.conj().T

    return apply


def block_expectation(blocks: SubalgebraBlocks) -> Channel:
    """Trace-preserving expectation sum_l tr_B(P_l rho P_l) kron I/b_l."""
    if blocks.weights is not None:
        raise ValidationError("block_expectation takes unweighted blocks; use weighted_expectation")
    d = blocks.dim
    return Channel(superop_from_map(_blockwise_map(blocks, False), d), d)


def weighted_expectation(blocks: SubalgebraBlocks) -> Channel:
    """Expectation sum_l tr_B(P_l rho P_l) kron sigma_l with per-block weights."""
    if blocks.weights is None:
        raise ValidationError("weighted_expectation needs a weight density for every block")
    d = blocks.dim
    return Channel(superop_from_map(_blockwise_map(blocks, True), d), d)


def pinching_expectation(basis) -> Channel:
    """Dephasing in the orthonormal basis given by the columns of ``basis``."""
    v = _check_unitary(basis)
    projs = [np.outer(v[:, i], v[:, i].conj()) for i in range(v.shape[0])]
    return Channel(sum(np.kron(p, p.conj()) for p in projs), v.shape[0], kraus=tuple(projs))


def subsystem_permutation(dims: Sequence[int], order: Sequence[int]) -> np.ndarray:
    """Unitary V whose columns list the product basis with subsystems reordered.

    ``V^dag X V`` is ``X`` with its tensor factors permuted into ``order``.
    """
    dims = list(dims)
    d = int(np.prod(dims))
    idx = np.arange(d).reshape(dims).transpose(order).reshape(d)
    v = np.zeros((d, d), dtype=complex)
    v[idx, np.arange(d)] = 1
    return v


def partial_trace_expectation(dims: Sequence[int], traced: Sequence[int]) -> Channel:
    """rho -> rho_rest kron I_traced/|traced|, with factors kept in their original order."""
    traced = sorted(set(traced))
    kept = [i for i in range(len(dims)) if i not in traced]
    a = int(np.prod([dims[i] for i in kept])) if kept else 1
    b = int(np.prod([dims[i] for i in traced])) if traced else 1
    v = subsystem_permutation(dims, kept + traced)
    return block_expectation(SubalgebraBlocks(v, ((a, b),)))


def _same_up_to_phase(a: np.ndarray, b: np.ndarray, tol: float) -> bool:
    ov = np.vdot(a, b)
    if abs(ov) < 1e-12:
        return False
    return bool(np.max(np.abs(a * (ov / abs(ov)) - b)) < tol)


def group_average_expectation(unitaries: Sequence[np.ndarray], tol: float = GROUP_TOL) -> Channel:
    """Uniform average of conjugations over a finite group of unitaries.

    Closure is checked up to a global phase, which conjugation cannot see.
    """
    us = [_check_unitary(u, "group element") for u in unitaries]
    if not us:
        raise ValidationError("empty group")
    d = us[0].shape[0]

    def find(x: np.ndarray) -> int | None:
        for k, u in enumerate(us):
            if _same_up_to_phase(u, x, tol):
                return k
        return None

    for i, ui in enumerate(us):
        if find(ui.conj().T) is None:
            raise ValidationError(f"inverse of element {i} is not in the set")
        for j, uj in enumerate(us):
            if find(ui @ uj) is None:
                raise ValidationError(f"product of elements {i} and {j} is not in the set")
    s = sum(np.kron(u, u.conj()) for u in us) / len(us)
    return Channel(s, d, mixture=tuple((1 / len(us), u) for u in us))


# -- channel algebra --------------------------------------------------------


def apply_channel(ch: Channel, rho) -> np.ndarray:
    rho = as_square(rho, "rho")
    if rho.shape[0] != ch.dim:
        raise ValidationError(f"channel acts on dimension {ch.dim}, input has {rho.shape[0]}")
    out = ch(rho)
    return (out + out.conj().T) / 2


def choi_matrix(ch: Channel) -> np.ndarray:
    return ch.choi


def compose(a: Channel, b: Channel) -> Channel:
    """The channel a o b (apply b first)."""
    if a.dim != b.dim:
        raise ValidationError(f"cannot compose dimensions {a.dim} and {b.dim}")
    return Channel(a.superop @ b.superop, a.dim)


def convex_combine(pairs: Sequence[tuple[float, Channel]], tol: float = 1e-12) -> Channel:
    if not pairs:
        raise ValidationError("empty convex combination")
    w = np.array([p for p, _ in pairs], dtype=float)
    if np.any(w < 0) or abs(w.sum() - 1) > tol:
        raise ValidationError(f"weights must be a probability vector (sum {w.sum()!r})")
    d = pairs[0][1].dim
    if any(ch.dim != d for _, ch in pairs):
        raise ValidationError("all channels must share one dimension")
    return Channel(sum(p * ch.superop for p, ch in pairs), d)


def superop_distance(a: Channel, b: Channel) -> float:
    """Spectral norm of the superoperator difference."""
    return float(np.linalg.norm(a.superop - b.superop, 2))


def choi_distance(a: Channel, b: Channel) -> float:
    """Frobenius distance between Choi matrices."""
    return float(np.linalg.norm(a.choi - b.choi))


def intersection_expectation(es: Sequence[Channel], tol: float = 1e-10, max_steps: int = 10_000) -> Channel:
    """Expectation onto the intersection of the fixed algebras of ``es``.

    Averages the inputs and squares the averaged superoperator until it
    stabilizes.
    """
    if not es:
        raise ValidationError("need at least one conditional expectation")
    d = es[0].dim
    for k, e in enumerate(es):
        if e.dim != d:
            raise ValidationError("all expectations must share one dimension")
        if not e.is_idempotent():
            raise ValidationError(f"input {k} is not idempotent")
    if len(es) == 1:
        return es[0]
    p = sum(e.superop for e in es) / len(es)
    resid = np.inf
    for _ in range(max_steps):
        p2 = p @ p
        resid = np.linalg.norm(p2 - p, 2)
        p = p2
        if resid < tol:
            break
    else:
        raise ConvergenceError("intersection power iteration did not converge", resid)
    if all(e.is_self_adjoint() for e in es):
        p = (p + p.conj().T) / 2
    return Channel(p, d)


def commuting_square_gap(e1: Channel, e2: Channel) -> tuple[float, bool]:
    """Norm of the commutator e1 e2 - e2 e1, and whether the pair is a commuting square."""
    for e in (e1, e2):
        if not e.is_idempotent():
            raise ValidationError("commuting_square_gap needs idempotent inputs")
    s12 = e1.superop @ e2.superop
    gap = float(np.linalg.norm(s12 - e2.superop @ e1.superop, 2))
    commuting = False
    if gap < 1e-9:
        inter = intersection_expectation([e1, e2])
        commuting = bool(np.linalg.norm(s12 - inter.superop, 2) < 1e-8)
    return gap, commuting


class ExpectationWeight(NamedTuple):
    w_star: float
    zeta_star: float
    supported: bool
    residual: Channel | None


def max_expectation_weight(psi: Channel, e: Channel, tol: float = 1e-10) -> ExpectationWeight:
    """Largest w with Choi(psi) - w Choi(e) positive semidefinite.

    Writes psi = (1 - zeta) e + zeta residual with zeta = 1 - w as small as
    possible. ``supported`` is False when Choi(e) leaks outside the support of
    Choi(psi), in which case w is 0.
    """
    if psi.dim != e.dim:
        raise ValidationError("dimension mismatch")
    if not e.is_idempotent():
        raise ValidationError("e must be idempotent")
    for name, prod in (("psi o e", psi.superop @ e.superop), ("e o psi", e.superop @ psi.superop)):
        if np.linalg.norm(prod - e.superop, 2) > 1e-8:
            raise ValidationError(f"{name} differs from e; psi must fix the range of e")
    jp = psi.choi
    je = e.choi
    w, v = np.linalg.eigh((jp + jp.conj().T) / 2)
    mask = support_mask(w)
    vs, vo = v[:, mask], v[:, ~mask]
    if vo.shape[1] and np.trace(vo.conj().T @ je @ vo).real > tol:
        return ExpectationWeight(0.0, 1.0, False, psi)
    s = 1 / np.sqrt(w[mask])
    m = s[:, None] * (vs.conj().T @ je @ vs) * s[None, :]
    top = np.linalg.eigvalsh((m + m.conj().T) / 2)[-1]
    wstar = float(min(1.0, 1 / top)) if top > 0 else 1.0
    # re-check the residual; back off a hair if rounding left it indefinite
    for _ in range(60):
        if np.linalg.eigvalsh(jp - wstar * je)[0] >= -tol:
            break
        wstar *= 1 - 1e-12 * 4
    zeta = 1.0 - wstar
    residual = None
    if zeta > 1e-12:
        residual = Channel((psi.superop - wstar * e.superop) / zeta, psi.dim)
    return ExpectationWeight(wstar, zeta, True, residual)


def near_zeta_sufficient(phi: Channel, e: Channel, blocks: SubalgebraBlocks | None = None) -> float:
    """Sufficient mixing weight zeta from the Bell-state image distance.

    Returns ``max_l m_l^2 d ||J(phi) - J(e)||_inf / d_l`` clamped to [0, 1],
    where block l has d_l = a_l b_l and traced dimension m_l = b_l. Without
    ``blocks`` the block factor is read off as the smallest nonzero eigenvalue
    of J(e), which gives the same number for block expectations.
    """
    d = phi.dim
    if e.dim != d:
        raise ValidationError("dimension mismatch")
    if not phi.is_unital(1e-8):
        raise ValidationError("phi must be unital")
    for name, prod in (("phi o e", phi.superop @ e.superop), ("e o phi", e.superop @ phi.superop)):
        if np.linalg.norm(prod - e.superop, 2) > 1e-8:
            raise ValidationError(f"{name} differs from e")
    gap = np.linalg.norm(phi.choi - e.choi, 2)
    if blocks is not None:
        if blocks.dim != d:
            raise ValidationError("blocks do not match the channel dimension")
        factor = max(b * b * d / (a * b) for a, b in blocks.blocks)
    else:
        w = np.linalg.eigvalsh(e.choi)
        factor = 1 / w[support_mask(w)].min()
    return float(min(1.0, max(0.0, factor * gap)))


def near_zeta_scalar_states(phi: Channel, samples: int = 10_000, seed=0) -> float:
    """Scalar-algebra variant d * max_eta ||phi(eta) - I/d||_inf over sampled pure states.

    This only certifies that phi - (1 - zeta) E is positive, not completely
    positive, so it can fall below the Choi-pencil optimum. Use
    :func:`near_zeta_sufficient` for a certified value.
    """
    d = phi.dim
    rng = rng_from(seed)
    z = rng.standard_normal((samples, d)) + 1j * rng.standard_normal((samples, d))
    z /= np.linalg.norm(z, axis=1, keepdims=True)
    outer = np.einsum("ni,nj->nij", z, z.conj()).reshape(samples, d * d)
    img = (outer @ phi.superop.T).reshape(samples, d, d) - np.eye(d) / d
    img = (img + np.conj(np.swapaxes(img, 1, 2))) / 2
    norms = np.abs(np.linalg.eigvalsh(img)).max(axis=1)
    return float(min(1.0, d * norms.max()))


class IndexEstimate(NamedTuple):
    lower_bound: float
    samples: int
    extended: bool


def _index_values(e: Channel, states: np.ndarray, r: int) -> np.ndarray:
    """psi^dag (E kron id_r)(psi psi^dag)^+ psi for each row of ``states``."""
    d = e.dim
    n = states.shape[0]
    outer = np.einsum("ni,nj->nij", states, states.conj())
    m = outer.reshape(n, d, r, d, r).transpose(0, 1, 3, 2, 4).reshape(n, d * d, r * r)
    img = np.einsum("ab,nbc->nac", e.superop, m)
    img = img.reshape(n, d, d, r, r).transpose(0, 1, 3, 2, 4).reshape(n, d * r, d * r)
    img = (img + np.conj(np.swapaxes(img, 1, 2))) / 2
    w, v = np.linalg.eigh(img)
    scale = w[:, -1:]
    keep = w >= 1e-10 * scale
    amp = np.abs(np.einsum("nji,nj->ni", v.conj(), states)) ** 2
    inv = np.where(keep, 1 / np.where(keep, w, 1), 0)
    return np.sum(amp * inv, axis=1)


def index_estimate(
    e: Channel,
    dim: int | None = None,
    samples: int = 10_000,
    extended: bool = False,
    seed=0,
    climb_steps: int = 100,
    batch: int = 2048,
) -> IndexEstimate:
    """Sampled lower bound on the index C = inf{c : rho <= c E(rho)}.

    With ``extended`` the channel is tensored with the identity on a reference
    system of dimension ``dim`` (defaults to e.dim), which bounds C_cb from below.
    """
    if not e.is_idempotent():
        raise ValidationError("index_estimate needs an idempotent expectation")
    if samples < 1:
        raise ValidationError("samples must be at least 1")
    r = (dim or e.dim) if extended else 1
    n_tot = e.dim * r
    rng = rng_from(seed)
    z = rng.standard_normal((samples, n_tot)) + 1j * rng.standard_normal((samples, n_tot))
    z /= np.linalg.norm(z, axis=1, keepdims=True)
    best_val, best = -np.inf, None
    for start in range(0, samples, batch):
        chunk = z[start:start + batch]
        vals = _index_values(e, chunk, r)
        k = int(np.argmax(vals))
        if vals[k] > best_val:
            best_val, best = float(vals[k]), chunk[k]
    climb = rng
    step = 0.3
    for _ in range(climb_steps):
        prop = best + step * (climb.standard_normal(n_tot) + 1j * climb.standard_normal(n_tot))
        prop /= np.linalg.norm(prop)
        val = float(_index_values(e, prop[None, :], r)[0])
        if val > best_val:
            best_val, best = val, prop
        else:
            step *= 0.9
    return IndexEstimate(max(1.0, best_val), samples, extended)


def weighted_index_multiplier(blocks: SubalgebraBlocks) -> float:
    """Scale factor max_l (1/b_l) / lambda_min(sigma_l) that carries an index bound
    for the trace-preserving expectation over to its weighted counterpart."""
    if blocks.weights is None:
        return 1.0
    return max((1 / b) / np.linalg.eigvalsh(w)[0] for (a, b), w in zip(blocks.blocks, blocks.weights))
