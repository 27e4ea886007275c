"""Majorization and the cascading redistribution of probability mass."""

from __future__ import annotations

import math
from typing import NamedTuple, Sequence

import numpy as np

from .matcore import ValidationError

MAJOR_TOL = 1e-12


class Move(NamedTuple):
    from_index: int
    to_index: int
    delta: float


def as_prob_vector(p, name: str = "p", tol: float = MAJOR_TOL) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.ndim != 1 or p.size == 0:
        raise ValidationError(f"{name} must be a non-empty vector")
    if np.any(p < -tol) or abs(math.fsum(p) - 1) > tol * max(1, p.size):
        raise ValidationError(f"{name} is not a probability vector")
    return p


def majorizes(p: Sequence[float], q: Sequence[float], tol: float = MAJOR_TOL) -> bool:
    """True iff every partial sum of sorted p dominates that of sorted q."""
    p = np.sort(np.asarray(p, dtype=float))[::-1]
    q = np.sort(np.asarray(q, dtype=float))[::-1]
    if p.shape != q.shape:
        raise ValidationError(f"length mismatch: {p.size} vs {q.size}")
    return bool(np.all(np.cumsum(p) >= np.cumsum(q) - tol))


def cascade_redistribute(src: Sequence[float], dst: Sequence[float]) -> list[Move]:
    """Moves that carry src onto dst when src majorizes dst (both sorted non-increasing).

    Walks i upward; any surplus src_i - dst_i is handed to the next entries
    j = i+1, i+2, ... that are still below their targets. Indices are 0-based.
    """
    src = as_prob_vector(src, "src")
    dst = as_prob_vector(dst, "dst")
    if src.shape != dst.shape:
        raise ValidationError("src and dst must have equal length")
    if np.any(np.diff(src) > MAJOR_TOL) or np.any(np.diff(dst) > MAJOR_TOL):
        raise ValidationError("src and dst must be sorted non-increasing")
    if not majorizes(src, dst):
        raise ValidationError("src does not majorize dst")
    n = src.size
    # each entry is kept as a list of summands and read back with fsum
    cur = [[float(x)] for x in src]
    moves: list[Move] = []
    for i in range(n):
        surplus = math.fsum(cur[i]) - dst[i]
        j = i + 1
        while surplus > MAJOR_TOL and j < n:
            need = dst[j] - math.fsum(cur[j])
            if need > MAJOR_TOL:
                delta = min(surplus, need)
                cur[i].append(-delta)
                cur[j].append(delta)
                surplus -= delta
                moves.append(Move(i, j, float(delta)))
            j += 1
    return moves


def replay_moves(vec: Sequence[float], moves: Sequence[Move]) -> np.ndarray:
    cur = [[float(x)] for x in vec]
    for m in moves:
        cur[m.from_index].append(-m.delta)
        cur[m.to_index].append(m.delta)
    return np.array([math.fsum(c) for c in cur])


def flatten_step_delta(rho_vec, omega_vec, i: int, j: int, delta: float) -> float:
    """Change in D(rho||omega) when mass delta moves from omega_i to omega_j.

    Checks rho_i >= rho_j, rho_i omega_j >= rho_j omega_i and 0 <= delta <= omega_i.
    """
    rho = np.asarray(rho_vec, dtype=float)
    om = np.asarray(omega_vec, dtype=float)
    if rho.shape != om.shape or not (0 <= i < rho.size and 0 <= j < rho.size) or i == j:
        raise ValidationError("invalid vectors or indices")
    if np.any(om <= 0):
        raise ValidationError("omega must be entrywise positive")
    tol = 1e-12
    if rho[i] < rho[j] - tol:
        raise ValidationError("need rho_i >= rho_j")
    if rho[i] * om[j] < rho[j] * om[i] - tol:
        raise ValidationError("need rho_i omega_j >= rho_j omega_i")
    if delta < 0 or delta > om[i] * (1 + tol):
        raise ValidationError("need 0 <= delta <= omega_i")
    if delta == 0:
        return 0.0
    out = -rho[j] * math.log1p(delta / om[j])
    if delta >= om[i]:
        return math.inf if rho[i] > 0 else out
    return rho[i] * -math.log1p(-delta / om[i]) + out
