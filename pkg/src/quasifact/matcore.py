"""Dense Hermitian linear algebra and random state generation."""

from __future__ import annotations

from typing import Callable, NamedTuple, Sequence

import numpy as np

HERMITIAN_TOL = 1e-12
DENSITY_TOL = 1e-10
SUPPORT_CUTOFF = 1e-10
MAX_DIM = 64

ENSEMBLES = ("hilbert-schmidt", "pure", "rank-k", "majorized-pair")


class ValidationError(ValueError):
    """Input violates a documented precondition."""


class DomainError(ValueError):
    """A scalar function was evaluated outside its domain."""


class ConvergenceError(RuntimeError):
    """An iterative routine did not reach its tolerance."""

    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (residual {residual:.3e})")
        self.residual = residual


class Spectrum(NamedTuple):
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def as_square(a, name: str = "matrix") -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
        raise ValidationError(f"{name} must be a non-empty square matrix, got shape {a.shape}")
    return a


def as_hermitian(h, name: str = "operator", tol: float = HERMITIAN_TOL) -> np.ndarray:
    """Validate Hermiticity entrywise and return the symmetrized matrix."""
    h = as_square(h, name)
    dev = np.max(np.abs(h - h.conj().T))
    if dev > tol * max(1.0, np.max(np.abs(h))):
        raise ValidationError(f"{name} is not Hermitian (max deviation {dev:.3e})")
    return (h + h.conj().T) / 2


def as_density(rho, name: str = "rho", tol: float = DENSITY_TOL) -> np.ndarray:
    rho = as_hermitian(rho, name, tol=max(HERMITIAN_TOL, tol * 1e-2))
    tr = np.trace(rho).real
    if abs(tr - 1) > tol:
        raise ValidationError(f"{name} has trace {tr!r}, expected 1")
    lmin = np.linalg.eigvalsh(rho)[0]
    if lmin < -tol:
        raise ValidationError(f"{name} has negative eigenvalue {lmin:.3e}")
    return rho


def check_same_dim(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise ValidationError(f"dimension mismatch: {a.shape} vs {b.shape}")


def spectral_decompose(h) -> Spectrum:
    """Eigen-decomposition with eigenvalues sorted non-increasing."""
    h = as_hermitian(h)
    w, v = np.linalg.eigh(h)
    return Spectrum(w[::-1].copy(), v[:, ::-1].copy())


def support_mask(eigenvalues: np.ndarray, cutoff: float = SUPPORT_CUTOFF) -> np.ndarray:
    """True for eigenvalues that count as nonzero under the relative cutoff."""
    scale = np.max(np.abs(eigenvalues)) if eigenvalues.size else 0.0
    if scale == 0:
        return np.zeros(eigenvalues.shape, dtype=bool)
    return np.abs(eigenvalues) >= cutoff * scale


def matrix_function_on_support(h, f: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    """Apply ``f`` to the eigenvalues of ``h`` on its support, mapping the kernel to 0.

    ``f`` receives a 1-d array of the supported eigenvalues. A non-finite result
    raises :class:`DomainError`.
    """
    w, v = spectral_decompose(h)
    mask = support_mask(w)
    out = np.zeros_like(w)
    if mask.any():
        with np.errstate(all="ignore"):
            vals = np.asarray(f(w[mask]), dtype=float)
        if not np.all(np.isfinite(vals)):
            bad = w[mask][~np.isfinite(vals)][0]
            raise DomainError(f"function undefined at eigenvalue {bad!r}")
        out[mask] = vals
    return (v * out) @ v.conj().T


def loewner_leq(a, b, tol: float = 1e-9) -> bool:
    """Return whether ``a <= b`` in the Loewner order, up to ``tol``."""
    a = as_hermitian(a, "a", tol=1e-9)
    b = as_hermitian(b, "b", tol=1e-9)
    check_same_dim(a, b)
    return bool(np.linalg.eigvalsh(b - a)[0] >= -tol)


def loewner_ratio(rho, sigma) -> float:
    """Smallest c with rho <= c*sigma, i.e. the largest eigenvalue of sigma^-1/2 rho sigma^-1/2.

    Returns ``inf`` when the support of ``rho`` is not inside that of ``sigma``.
    """
    w, v = np.linalg.eigh(as_square(sigma))
    mask = support_mask(w)
    rt = v.conj().T @ as_square(rho) @ v
    off = rt[np.ix_(~mask, ~mask)]
    if off.size and np.trace(off).real > SUPPORT_CUTOFF * max(1.0, np.trace(rt).real):
        return float("inf")
    s = 1 / np.sqrt(w[mask])
    m = s[:, None] * rt[np.ix_(mask, mask)] * s[None, :]
    return float(np.linalg.eigvalsh((m + m.conj().T) / 2)[-1])


def rng_from(seed) -> np.random.Generator:
    return np.random.default_rng(seed)


def random_unitary(dim: int, seed=None) -> np.ndarray:
    """Haar-random unitary via QR of a complex Ginibre matrix."""
    rng = rng_from(seed)
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    ph = np.diagonal(r) / np.abs(np.diagonal(r))
    return q * ph


def _ginibre_density(dim: int, rank: int, rng: np.random.Generator) -> np.ndarray:
    g = rng.standard_normal((dim, rank)) + 1j * rng.standard_normal((dim, rank))
    rho = g @ g.conj().T
    rho = (rho + rho.conj().T) / 2
    return rho / np.trace(rho).real


def random_density(
    dim: int,
    ensemble: str = "hilbert-schmidt",
    seed=None,
    *,
    rank: int | None = None,
    weights: Sequence[float] | None = None,
    n_unitaries: int | None = None,
):
    """Draw a random density matrix.

    Args:
        dim: matrix side length.
        ensemble: one of ``hilbert-schmidt``, ``pure``, ``rank-k`` or
            ``majorized-pair``.
        seed: integer seed or ``numpy.random.Generator``.
        rank: rank for the ``rank-k`` ensemble (defaults to ``max(1, dim // 2)``).
        weights: mixing weights for ``majorized-pair``; random Dirichlet if omitted.
        n_unitaries: number of unitaries for ``majorized-pair`` when weights are random.

    Returns:
        A density matrix, or the pair ``(rho, sigma)`` with ``rho`` majorizing
        ``sigma`` for the ``majorized-pair`` ensemble.
    """
    if int(dim) != dim or dim < 1:
        raise ValidationError(f"dim must be a positive integer, got {dim!r}")
    if ensemble not in ENSEMBLES:
        raise ValidationError(f"unknown ensemble {ensemble!r}; expected one of {ENSEMBLES}")
    rng = rng_from(seed)
    if dim == 1:
        one = np.ones((1, 1), dtype=complex)
        return (one, one.copy()) if ensemble == "majorized-pair" else one
    if ensemble == "hilbert-schmidt":
        return _ginibre_density(dim, dim, rng)
    if ensemble == "pure":
        return _ginibre_density(dim, 1, rng)
    if ensemble == "rank-k":
        k = max(1, dim // 2) if rank is None else int(rank)
        if not 1 <= k <= dim:
            raise ValidationError(f"rank must lie in 1..{dim}, got {rank!r}")
        return _ginibre_density(dim, k, rng)
    rho = _ginibre_density(dim, dim, rng)
    if weights is None:
        n = n_unitaries or int(rng.integers(1, dim + 2))
        p = rng.dirichlet(np.ones(n))
    else:
        p = np.asarray(weights, dtype=float)
        if np.any(p < 0) or abs(p.sum() - 1) > 1e-12:
            raise ValidationError("mixing weights must be a probability vector")
    sigma = np.zeros_like(rho)
    for pk in p:
        u = random_unitary(dim, rng)
        sigma += pk * (u @ rho @ u.conj().T)
    sigma = (sigma + sigma.conj().T) / 2
    return rho, sigma / np.trace(sigma).real


def partial_trace(rho: np.ndarray, dims: Sequence[int], keep: Sequence[int]) -> np.ndarray:
    """Reduced matrix on the subsystems listed in ``keep`` (in increasing order)."""
    dims = list(dims)
    n = len(dims)
    keep = sorted(keep)
    t = np.asarray(rho).reshape(dims + dims)
    traced = [i for i in range(n) if i not in keep]
    # trace out from the back so axis indices stay valid
    for count, i in enumerate(sorted(traced, reverse=True)):
        width = n - count
        t = np.trace(t, axis1=i, axis2=i + width)
    k = int(np.prod([dims[i] for i in keep])) if keep else 1
    return t.reshape(k, k)


def herm_part(a: np.ndarray) -> np.ndarray:
    return (a + a.conj().T) / 2
