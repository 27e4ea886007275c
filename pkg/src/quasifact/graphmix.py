"""Graph- and group-generated mixing channels, decay certificates and semigroup simulation.

Edges act on C^n through transposition permutation matrices u(i,j). The
fixed algebra of all edge conjugations of a connected graph is span{I, J}
(J the all-ones matrix), and E_G denotes the trace-preserving projection onto it.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from itertools import combinations
from typing import NamedTuple, Sequence

import numpy as np

from .bounds import beta_c_zeta, qf_certificate
from .channels import Channel, from_mixture, max_expectation_weight
from .entropy import relative_entropy
from .matcore import DomainError, ValidationError, as_density, random_density

CONVENTION = "edge-CMLSI-1, L = (1/m)Σ(ρ − uρu†)"
QUANTUM_CAP = 16
# phi_graph alone never dominates a multiple of E_G: its Kraus span misses the
# 3-cycles, so the exact path needs sequence lengths >= 2
DEFAULT_LENGTHS = tuple(sorted({1, 3} | {2**k for k in range(1, 13)} | {3 * 2**k for k in range(0, 11)}))


@dataclass(frozen=True)
class GraphSpec:
    n: int
    edges: tuple[tuple[int, int], ...]
    name: str = ""

    @property
    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.n, dtype=int)
        for i, j in self.edges:
            deg[i] += 1
            deg[j] += 1
        return deg

    @property
    def regular(self) -> bool:
        deg = self.degrees
        return bool(np.all(deg == deg[0]))

    @property
    def m(self) -> int | None:
        return int(self.degrees[0]) if self.regular else None

    def adjacency(self) -> np.ndarray:
        a = np.zeros((self.n, self.n))
        for i, j in self.edges:
            a[i, j] = a[j, i] = 1
        return a

    def connected(self) -> bool:
        adj = [[] for _ in range(self.n)]
        for i, j in self.edges:
            adj[i].append(j)
            adj[j].append(i)
        seen, stack = {0}, [0]
        while stack:
            for w in adj[stack.pop()]:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        return len(seen) == self.n

    def bipartition(self) -> np.ndarray | None:
        """Two-colouring with vertex 0 coloured 0, or None if the graph has an odd cycle."""
        colour = -np.ones(self.n, dtype=int)
        adj = [[] for _ in range(self.n)]
        for i, j in self.edges:
            adj[i].append(j)
            adj[j].append(i)
        for s in range(self.n):
            if colour[s] >= 0:
                continue
            colour[s] = 0
            stack = [s]
            while stack:
                v = stack.pop()
                for w in adj[v]:
                    if colour[w] < 0:
                        colour[w] = 1 - colour[v]
                        stack.append(w)
                    elif colour[w] == colour[v]:
                        return None
        return colour


def graph_from_edges(n: int, edges, name: str = "", require_connected: bool = True) -> GraphSpec:
    n = int(n)
    if n < 2:
        raise ValidationError("a graph needs at least 2 vertices")
    clean = set()
    for e in edges:
        i, j = (int(x) for x in e)
        if i == j:
            raise ValidationError(f"self-loop at vertex {i}")
        if not (0 <= i < n and 0 <= j < n):
            raise ValidationError(f"edge ({i}, {j}) out of range for n={n}")
        key = (min(i, j), max(i, j))
        if key in clean:
            raise ValidationError(f"duplicate edge {key}")
        clean.add(key)
    g = GraphSpec(n, tuple(sorted(clean)), name)
    if require_connected and not g.connected():
        raise ValidationError(f"graph {name or ''} is disconnected".replace("  ", " "))
    return g


def _is_prime(q: int) -> bool:
    return q > 1 and all(q % p for p in range(2, int(math.isqrt(q)) + 1))


def _parse_edge_text(text: str):
    pairs = []
    for line in text.replace(",", "\n").replace(";", "\n").splitlines():
        line = line.strip().replace("-", " ")
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ValidationError(f"cannot parse edge {line!r}")
        pairs.append((int(parts[0]), int(parts[1])))
    return pairs


def build_graph(kind: str, require_connected: bool = True) -> GraphSpec:
    """Build a graph from ``cycle:n``, ``complete:n``, ``paley:q``, ``edges:0-1,1-2,...``
    or a path to a JSON ``{"n", "edges"}`` or ``i j`` edge-list file."""
    if os.path.isfile(kind):
        with open(kind) as fh:
            text = fh.read()
        try:
            data = json.loads(text)
        except json.JSONDecodeError:
            pairs = _parse_edge_text(text)
            n = 1 + max(max(p) for p in pairs)
            return graph_from_edges(n, pairs, os.path.basename(kind), require_connected)
        return graph_from_edges(data["n"], data["edges"], os.path.basename(kind), require_connected)
    head, _, arg = kind.partition(":")
    try:
        if head == "cycle":
            n = int(arg)
            if n < 3:
                raise ValidationError("cycle needs n >= 3")
            return graph_from_edges(n, [(i, (i + 1) % n) for i in range(n)], kind, require_connected)
        if head == "complete":
            n = int(arg)
            return graph_from_edges(n, combinations(range(n), 2), kind, require_connected)
        if head == "paley":
            q = int(arg)
            if not _is_prime(q) or q % 4 != 1:
                raise ValidationError(f"paley needs a prime q = 1 mod 4, got {q}")
            squares = {(x * x) % q for x in range(1, q)}
            edges = [(i, j) for i, j in combinations(range(q), 2) if (j - i) % q in squares]
            return graph_from_edges(q, edges, kind, require_connected)
        if head == "edges":
            pairs = _parse_edge_text(arg)
            if not pairs:
                raise ValidationError("empty edge list")
            n = 1 + max(max(p) for p in pairs)
            return graph_from_edges(n, pairs, kind, require_connected)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ValidationError):
            raise
        raise ValidationError(f"cannot parse graph spec {kind!r}: {exc}") from exc
    raise ValidationError(f"unknown graph spec {kind!r}")


def quadratic_residues(q: int) -> list[int]:
    return sorted({(x * x) % q for x in range(1, q)})


def normalized_adjacency(g: GraphSpec) -> np.ndarray:
    if not g.regular:
        raise ValidationError("graph is not regular")
    return g.adjacency() / g.m


def adjacency_gamma(g: GraphSpec, two_sided: bool = False) -> float:
    """Largest nontrivial eigenvalue magnitude of A/m.

    By default this is |lambda_2|, the second eigenvalue in non-increasing order.
    With ``two_sided`` it is max(|lambda_2|, |lambda_n|), which equals 1 for
    bipartite graphs because of the parity eigenvalue -1.
    """
    w = np.sort(np.linalg.eigvalsh(normalized_adjacency(g)))[::-1]
    if w.size < 2:
        return 0.0
    return float(max(abs(w[1]), abs(w[-1]))) if two_sided else float(abs(w[1]))


# -- channels on C^n ----------------------------------------------------------


def transposition(n: int, i: int, j: int) -> np.ndarray:
    u = np.eye(n, dtype=complex)
    u[[i, j]] = u[[j, i]]
    return u


def edge_expectation(g: GraphSpec, i: int, j: int) -> Channel:
    """(id + ad_u(i,j))/2, the expectation onto matrices commuting with u(i,j)."""
    if (min(i, j), max(i, j)) not in set(g.edges):
        raise ValidationError(f"({i}, {j}) is not an edge")
    n = g.n
    return from_mixture([(0.5, np.eye(n, dtype=complex)), (0.5, transposition(n, i, j))])


def graph_expectation(g: GraphSpec) -> Channel:
    """Trace-preserving projection onto span{I, J}, the fixed algebra of a connected graph."""
    if not g.connected():
        raise ValidationError("graph_expectation needs a connected graph")
    n = g.n
    e1 = np.eye(n).reshape(-1) / math.sqrt(n)
    e2 = (np.ones((n, n)) - np.eye(n)).reshape(-1) / math.sqrt(n * n - n)
    return Channel((np.outer(e1, e1) + np.outer(e2, e2)).astype(complex), n)


def transposition_average(g: GraphSpec) -> Channel:
    """(id + sum_e ad_u(e)) / (|E| + 1).

    For comparison only: it satisfies phi_graph = (1 - 1/|E|)/2 id + (1 + 1/|E|)/2 of
    this map for every graph, but it is not idempotent once n >= 3.
    """
    n = g.n
    s = np.eye(n * n, dtype=complex)
    for i, j in g.edges:
        u = transposition(n, i, j)
        s = s + np.kron(u, u)
    return Channel(s / (len(g.edges) + 1), n)


def phi_graph(g: GraphSpec) -> Channel:
    """(1/|E|) sum_e E_e = id/2 + (1/(2|E|)) sum_e ad_u(e)."""
    n = g.n
    s = np.zeros((n * n, n * n), dtype=complex)
    for i, j in g.edges:
        u = transposition(n, i, j)
        s += np.kron(u, u)
    return Channel(0.5 * np.eye(n * n) + s / (2 * len(g.edges)), n)


# -- classical transference on permutation groups -----------------------------


def _check_perm(p, n: int | None = None) -> tuple[int, ...]:
    p = tuple(int(x) for x in p)
    if sorted(p) != list(range(len(p))) or (n is not None and len(p) != n):
        raise ValidationError(f"invalid permutation {p!r}")
    return p


def perm_compose(g: Sequence[int], h: Sequence[int]) -> tuple[int, ...]:
    """(g h)(x) = g(h(x))."""
    g = _check_perm(g)
    h = _check_perm(h, len(g))
    return tuple(g[h[x]] for x in range(len(h)))


def generate_group(perms: Sequence[Sequence[int]]) -> list[tuple[int, ...]]:
    """All elements generated by ``perms``, sorted lexicographically."""
    gens = [_check_perm(p) for p in perms]
    if not gens:
        raise ValidationError("need at least one permutation")
    n = len(gens[0])
    ident = tuple(range(n))
    seen = {ident}
    frontier = [ident]
    while frontier:
        nxt = []
        for x in frontier:
            for s in gens:
                y = perm_compose(s, x)
                if y not in seen:
                    seen.add(y)
                    nxt.append(y)
        frontier = nxt
    return sorted(seen)


def group_transfer_step(perms, q, p, elements: Sequence[Sequence[int]] | None = None) -> np.ndarray:
    """One step of the convolution p -> sum_g q_g (g . p) on the group.

    ``p`` is indexed by ``elements`` (default: the group generated by ``perms``).
    """
    gens = [_check_perm(x) for x in perms]
    elements = generate_group(gens) if elements is None else [_check_perm(x) for x in elements]
    index = {e: k for k, e in enumerate(elements)}
    q = np.asarray(q, dtype=float)
    p = np.asarray(p, dtype=float)
    if q.shape != (len(gens),) or p.shape != (len(elements),):
        raise ValidationError("q must match perms and p must match the group elements")
    out = np.zeros_like(p)
    for qg, gperm in zip(q, gens):
        if qg == 0:
            continue
        for k, h in enumerate(elements):
            if p[k] == 0:
                continue
            gh = perm_compose(gperm, h)
            if gh not in index:
                raise ValidationError(f"product {gh} leaves the supplied element set")
            out[index[gh]] += qg * p[k]
    return out


class TransferConstants(NamedTuple):
    zeta: float
    ratio: float
    c: float


def transfer_constants(p) -> TransferConstants:
    """Read (zeta, c) off a distribution on a group.

    p = (1 - zeta) uniform + zeta p_tilde with zeta = 1 - |G| min p. ``ratio`` is
    max p / min p, and ``c`` = |G| is the index bound used with beta_{c,zeta}.
    """
    p = np.asarray(p, dtype=float)
    if p.ndim != 1 or np.any(p < -1e-12) or abs(p.sum() - 1) > 1e-9:
        raise ValidationError("p must be a probability vector")
    size = p.size
    zeta = min(1.0, max(0.0, 1 - size * p.min()))
    ratio = math.inf if p.min() <= 0 else float(p.max() / p.min())
    return TransferConstants(zeta, ratio, float(size))


class WalkExtremes(NamedTuple):
    p_min: float
    p_max: float
    parity_restricted: bool


def walk_distribution(g: GraphSpec, steps: int, start: int = 0) -> np.ndarray:
    a = normalized_adjacency(g)
    p = np.zeros(g.n)
    p[start] = 1.0
    for _ in range(int(steps)):
        p = a @ p
    return p


def walk_extremes(g: GraphSpec, steps: int, start: int = 0) -> WalkExtremes:
    """Smallest and largest vertex probability of the simple random walk after ``steps`` steps.

    On a bipartite graph only the vertices reachable at this parity are counted.
    """
    p = walk_distribution(g, steps, start)
    colour = g.bipartition()
    if colour is None:
        return WalkExtremes(float(p.min()), float(p.max()), False)
    cls = colour == ((colour[start] + steps) % 2)
    if steps == 0:
        return WalkExtremes(0.0, 1.0, True)
    return WalkExtremes(float(p[cls].min()), float(p[cls].max()), True)


# -- certificates ---------------------------------------------------------------


def binary_rel_entropy(p: float, q: float) -> float:
    """Relative entropy of a p-coin to a q-coin, in nats."""
    if not 0 < q < 1:
        raise DomainError("q must lie strictly between 0 and 1")
    if not 0 <= p <= 1:
        raise DomainError("p must lie in [0, 1]")
    out = 0.0
    if p > 0:
        out += p * math.log(p / q)
    if p < 1:
        out += (1 - p) * math.log((1 - p) / (1 - q))
    return max(0.0, out)


def simplified_exponent_constant() -> float:
    """ln(5/2)/5 + 7/60, a closed-form stand-in for n D(1/(5n)||1/(2n)).

    Direct evaluation shows it overstates that quantity (at n = 3 the true
    value of n D is 0.134 against 0.300), so it is exposed for comparison only and
    never used to certify.
    """
    return math.log(2.5) / 5 + 7 / 60


def cb_index_fixed_algebra(n: int) -> float:
    """Extended index of span{I, J} in M_n: 1 + (n-1)^2.

    The algebra has minimal projections J/n (rank 1) and I - J/n (rank n-1).
    """
    return 1.0 + (n - 1) ** 2


def mlsi_merge(lambdas: Sequence[float], alpha: float) -> float:
    lam = [float(x) for x in lambdas]
    if not lam or any(x <= 0 for x in lam) or alpha <= 0:
        raise ValidationError("need a non-empty list of positive rates and alpha > 0")
    return min(lam) / alpha


@dataclass(frozen=True)
class MixCertificate:
    gamma: float
    c: float
    zeta: float
    k: float
    t: int
    alpha_sqf: float
    lambda_cert: float
    convention: str = CONVENTION
    trivial: bool = False
    reason: str = ""
    path: str = "expander"
    beta: float = float("nan")
    chernoff: float = float("nan")
    details: dict = field(default_factory=dict, compare=False)

    def as_dict(self) -> dict:
        out = {k: getattr(self, k) for k in (
            "gamma", "c", "zeta", "k", "t", "alpha_sqf", "lambda_cert", "convention",
            "trivial", "reason", "path", "beta", "chernoff")}
        out["details"] = dict(self.details)
        return out


def _trivial(gamma: float, c: float, reason: str, path: str) -> MixCertificate:
    return MixCertificate(gamma, c, 1.0, 0, 0, math.inf, 0.0, trivial=True, reason=reason, path=path)


def default_grids(g: GraphSpec, gamma: float) -> tuple[list[int], list[int]]:
    t0 = max(1, math.ceil(math.log(1 / g.n) / math.log(gamma) - 1e-12))
    ts = list(range(t0, 4 * t0 + 1))
    ks = sorted({math.ceil(kappa * t / (g.m - 1)) for t in ts for kappa in range(2, 13)})
    return ks, ts


def _expander_certificate(g: GraphSpec, grid_k, grid_t, c: float) -> MixCertificate:
    gamma = adjacency_gamma(g, two_sided=True)
    if gamma >= 1 - 1e-12:
        reason = "bipartite parity obstruction" if g.bipartition() is not None else "gamma = 1"
        return _trivial(gamma, c, reason, "expander")
    n, m, ne = g.n, g.m, len(g.edges)
    if m < 2:
        return _trivial(gamma, c, "degree below 2", "expander")
    t_lo = math.ceil(math.log(1 / n) / math.log(gamma) - 1e-12) if gamma > 0 else 1
    if grid_k is None or grid_t is None:
        dk, dt = default_grids(g, gamma)
        grid_k = dk if grid_k is None else grid_k
        grid_t = dt if grid_t is None else grid_t
    q = 1 / (2 * n)
    best = None
    for t in grid_t:
        if t < t_lo:
            continue
        zeta = min(1.0, n * gamma**t)
        if zeta >= 1:
            continue
        beta = beta_c_zeta(c, zeta)
        if beta <= 0:
            continue
        for k in (grid_k if not isinstance(grid_k, dict) else grid_k[t]):
            # k rounds of |E| applications of phi_graph; nu = walk steps per application
            nu = t / (ne * k)
            if nu >= q:
                continue
            chern = 1 - math.exp(-ne * k * binary_rel_entropy(nu, q))
            if chern <= 0:
                continue
            alpha = k / (beta * chern)
            if best is None or alpha < best[0]:
                best = (alpha, k, t, zeta, beta, chern)
    if best is None:
        return _trivial(gamma, c, "no grid point gives a positive comparison factor", "expander")
    alpha, k, t, zeta, beta, chern = best
    lam = 2 / m * mlsi_merge([1.0] * ne, alpha)
    return MixCertificate(gamma, c, zeta, k, t, alpha, lam, beta=beta, chernoff=chern, path="expander")


def _choi_certificate(g: GraphSpec, c: float, lengths: Sequence[int]) -> MixCertificate:
    """Certificate from the exact decomposition phi_graph^T = (1 - zeta_T) E_G + zeta_T Phi_T.

    A uniformly random length-T edge sequence uses each edge T/|E| times on
    average, so alpha = (T/|E|) power / beta_{c, eps} after the power step.
    """
    n, ne = g.n, len(g.edges)
    if n > QUANTUM_CAP:
        raise ValidationError(f"exact decomposition is capped at n <= {QUANTUM_CAP}")
    phi = phi_graph(g)
    e = graph_expectation(g)
    gamma = adjacency_gamma(g, two_sided=True)
    best = None
    for T in sorted(set(int(x) for x in lengths)):
        if T < 1:
            raise ValidationError("sequence lengths must be positive")
        power_op = np.linalg.matrix_power(phi.superop, T)
        w = max_expectation_weight(Channel(power_op, n), e)
        zeta_t = w.zeta_star
        # zeta_2T <= zeta_T^2, so lengths with zeta_T > 1/2 are covered by longer ones
        if not w.supported or zeta_t > 0.5:
            continue
        if zeta_t <= 1e-12:
            alpha, eps, power, beta = T / ne, 0.0, 1, 1.0
        else:
            cert = qf_certificate(c, zeta_t, T / ne)
            if cert.trivial:
                continue
            alpha, eps, power, beta = cert.alpha, cert.epsilon_used, cert.power, cert.beta_used
        if best is None or alpha < best[0]:
            best = (alpha, T, zeta_t, eps, power, beta)
    if best is None:
        return _trivial(gamma, c, "no sequence length gives a positive comparison factor", "choi")
    alpha, T, zeta_t, eps, power, beta = best
    lam = 2 / g.m * mlsi_merge([1.0] * ne, alpha)
    return MixCertificate(
        gamma, c, zeta_t, T * power, 0, alpha, lam, beta=beta, chernoff=1.0, path="choi",
        details={"length": T, "epsilon": eps, "power": power, "w_star": 1 - zeta_t},
    )


def _is_complete(g: GraphSpec) -> bool:
    return len(g.edges) == g.n * (g.n - 1) // 2


def cmlsi_certificate(
    g: GraphSpec,
    grid_k: Sequence[int] | None = None,
    grid_t: Sequence[int] | None = None,
    path: str = "auto",
    c: float | None = None,
    lengths: Sequence[int] | None = None,
) -> MixCertificate:
    """Quasi-factorization constant alpha_sqf and decay rate lambda_cert for the graph Lindbladian.

    ``path="expander"`` sweeps (k, t) using the spectral bound zeta = n gamma^t
    and a Chernoff estimate for the number of walk steps. ``path="choi"``
    decomposes powers phi_graph^T exactly through the Choi pencil (T taken from
    ``lengths``). ``"auto"`` keeps the smaller alpha of the two when n <= 16
    and uses the expander path above that. ``c`` defaults to the extended index 1 + (n-1)^2.
    """
    if not g.regular:
        raise ValidationError("certificates need a regular graph")
    if not g.connected():
        raise ValidationError("certificates need a connected graph")
    c = cb_index_fixed_algebra(g.n) if c is None else float(c)
    if path == "auto":
        spectral = _expander_certificate(g, grid_k, grid_t, c)
        if g.n > QUANTUM_CAP:
            return spectral
        exact = _choi_certificate(g, c, DEFAULT_LENGTHS if lengths is None else lengths)
        return exact if exact.alpha_sqf <= spectral.alpha_sqf else spectral
    if path == "choi":
        return _choi_certificate(g, c, DEFAULT_LENGTHS if lengths is None else lengths)
    if path == "expander":
        return _expander_certificate(g, grid_k, grid_t, c)
    raise ValidationError(f"unknown certificate path {path!r}")


# -- semigroups -----------------------------------------------------------------


def graph_lindbladian(g: GraphSpec) -> np.ndarray:
    """Superoperator of L(rho) = (1/m) sum_e (rho - u rho u^dag)."""
    if not g.regular:
        raise ValidationError("graph_lindbladian needs a regular graph")
    n = g.n
    s = np.zeros((n * n, n * n), dtype=complex)
    for i, j in g.edges:
        u = transposition(n, i, j)
        s += np.eye(n * n) - np.kron(u, u)
    return s / g.m


def extend_generator(L: np.ndarray, b: int) -> np.ndarray:
    """L kron id on an auxiliary system of dimension b."""
    n = int(round(math.sqrt(L.shape[0])))
    return Channel(L, n).tensor_identity(b).superop


class _Spectral(NamedTuple):
    w: np.ndarray
    v: np.ndarray


def _spectral(L: np.ndarray) -> _Spectral:
    L = np.asarray(L, dtype=complex)
    if np.max(np.abs(L - L.conj().T)) > 1e-10:
        raise ValidationError("generator is not self-adjoint")
    w, v = np.linalg.eigh((L + L.conj().T) / 2)
    if w[0] < -1e-9:
        raise ValidationError(f"generator has negative eigenvalue {w[0]:.3e}")
    return _Spectral(np.clip(w, 0, None), v)


def _evolve(spec: _Spectral, rho: np.ndarray, t: float) -> np.ndarray:
    d = rho.shape[0]
    coeff = spec.v.conj().T @ rho.reshape(-1)
    out = (spec.v @ (np.exp(-t * spec.w) * coeff)).reshape(d, d)
    return (out + out.conj().T) / 2


def semigroup_evolve(L: np.ndarray, rho, t: float) -> np.ndarray:
    """exp(-t L) applied to rho."""
    if t < 0:
        raise ValidationError("t must be nonnegative")
    rho = np.asarray(rho, dtype=complex)
    return _evolve(_spectral(L), rho, t)


class DecayCurve(NamedTuple):
    times: np.ndarray
    values: np.ndarray


def decay_curve(L: np.ndarray, rho, e: Channel, times: Sequence[float]) -> DecayCurve:
    """D(rho_t || E rho) along ``times``."""
    times = np.asarray(times, dtype=float)
    if np.any(np.diff(times) <= 0) or np.any(times < 0):
        raise ValidationError("times must be nonnegative and increasing")
    rho = as_density(rho)
    spec = _spectral(L)
    target = e(rho)
    vals = np.array([relative_entropy(_evolve(spec, rho, t), target) for t in times])
    return DecayCurve(times, vals)


def spectral_gap(L: np.ndarray) -> float:
    w = _spectral(L).w
    pos = w[w > 1e-9]
    return float(pos.min()) if pos.size else 0.0


def envelope_check(g: GraphSpec, lam: float, trials: int, extended_trials: int, times,
                   seed: int = 0, tol: float = 1e-8) -> dict:
    """Worst excess of D(rho_t||E rho) over exp(-lam t) D(rho||E rho) on random states.

    ``extended_trials`` further states live on C^n kron C^2 and evolve under L kron id.
    """
    times = np.asarray(times, dtype=float)
    gen = graph_lindbladian(g)
    e = graph_expectation(g)
    rng = np.random.default_rng(seed)
    setups = [(gen, e, g.n, trials)]
    if extended_trials:
        if 2 * g.n > QUANTUM_CAP:
            raise ValidationError(f"extended simulation is capped at 2n <= {QUANTUM_CAP}")
        setups.append((extend_generator(gen, 2), e.tensor_identity(2), 2 * g.n, extended_trials))
    worst, count = -math.inf, 0
    envelope = np.exp(-lam * times)
    # equality holds at t = 0, so only later times are informative
    live = times > 0 if np.any(times > 0) else np.ones(times.size, dtype=bool)
    for gen_, ex, dim, k in setups:
        for _ in range(k):
            curve = decay_curve(gen_, random_density(dim, "hilbert-schmidt", rng), ex, times)
            worst = max(worst, float(np.max((curve.values - envelope * curve.values[0])[live])))
            count += 1
    return {"trials": count, "worst_excess": worst, "tol": tol, "verdict": "pass" if worst <= tol else "fail"}


class RestrictionCheck(NamedTuple):
    residual: float
    diagonal_leak: float
    block_leak: float


def classical_laplacian(g: GraphSpec) -> np.ndarray:
    """(D - A)/m, which matches the diagonal action of the 1/m-normalized Lindbladian."""
    return (np.diag(g.degrees) - g.adjacency()) / g.m


def classical_restriction_check(g: GraphSpec, p, seed=0) -> RestrictionCheck:
    """Compare L on diagonal inputs with the classical Laplacian.

    Also measures how much off-diagonal mass L creates from a diagonal input and
    how much off-block mass L kron id creates from a block-diagonal input with a
    qubit attached to each vertex.
    """
    p = np.asarray(p, dtype=float)
    if p.shape != (g.n,):
        raise ValidationError("p must have one entry per vertex")
    n = g.n
    L = graph_lindbladian(g)
    out = (L @ np.diag(p).astype(complex).reshape(-1)).reshape(n, n)
    residual = float(np.sum(np.abs(np.real(np.diagonal(out)) - classical_laplacian(g) @ p)))
    diag_leak = float(np.sum(np.abs(out - np.diag(np.diagonal(out)))))
    rng = np.random.default_rng(seed)
    b = 2
    big = np.zeros((n * b, n * b), dtype=complex)
    for x in range(n):
        z = rng.standard_normal((b, b)) + 1j * rng.standard_normal((b, b))
        blk = z @ z.conj().T
        big[x * b:(x + 1) * b, x * b:(x + 1) * b] = p[x] * blk / np.trace(blk).real
    outb = (extend_generator(L, b) @ big.reshape(-1)).reshape(n, b, n, b)
    mask = ~np.eye(n, dtype=bool)
    block_leak = float(np.sum(np.abs(outb.transpose(0, 2, 1, 3)[mask])))
    return RestrictionCheck(residual, diag_leak, block_leak)
