"""Batch command-line interface: ``quasifact <command> ...``.

Exit codes: 0 clean, 1 an inequality or envelope was violated, 2 bad input.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import time

import numpy as np

from . import graphmix as gm
from .bounds import approx_beta, approx_zeta_max, beta_c_zeta
from .entropy import relative_entropy
from .matcore import random_density
from .suites import SUITES, run_suite
from .uncertainty import (
    bardet_bound,
    fourier_pair,
    maassen_uffink_bound,
    qf_uncertainty_bound,
    rotated_pair,
)

SCHEMA = 1
EXIT_OK, EXIT_VIOLATION, EXIT_INPUT = 0, 1, 2
SEED_ENV = "QUASIFACT_SEED"


class InputError(Exception):
    pass


def _jsonable(x):
    if isinstance(x, float) and not math.isfinite(x):
        return str(x)
    if isinstance(x, (np.floating, np.integer)):
        return _jsonable(x.item())
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    return x


def _write_json(payload: dict, path: str | None) -> None:
    text = json.dumps(_jsonable(payload), indent=2, sort_keys=True) + "\n"
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def _write_csv(header, rows, path: str | None) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    if path in (None, "-"):
        sys.stdout.write(buf.getvalue())
    else:
        with open(path, "w") as fh:
            fh.write(buf.getvalue())


def _report(command, seed, trials, violations, max_violation, constants, started) -> dict:
    return {
        "schema": SCHEMA,
        "command": command,
        "seed": seed,
        "trials": trials,
        "violations": violations,
        "max_violation": max_violation,
        "constants": constants,
        "wall_time_ms": int((time.perf_counter() - started) * 1000),
    }


def _graph(spec: str) -> gm.GraphSpec:
    try:
        g = gm.build_graph(spec)
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    if not g.regular:
        raise InputError(f"graph {spec} is not regular")
    return g


# -- commands ---------------------------------------------------------------------


def cmd_verify(args) -> int:
    started = time.perf_counter()
    names = sorted(SUITES) if args.suite == "all" else [args.suite]
    if args.suite != "all" and args.suite not in SUITES:
        raise InputError(f"unknown suite {args.suite!r}; available: {', '.join(sorted(SUITES))}")
    dims = args.dim or [3]
    violations, constants = [], {}
    for name in names:
        for d in dims:
            try:
                res = run_suite(name, d, args.trials, args.seed, args.tol)
            except ValueError as exc:
                raise InputError(str(exc)) from exc
            for v in res.violations:
                violations.append({**v, "dim": d})
            constants[f"{name}/d={d}/min_slack"] = res.min_slack
            constants[f"{name}/d={d}/max_violation"] = res.max_violation
    worst = max([0.0] + [v for k, v in constants.items() if k.endswith("max_violation")])
    report = _report("verify", args.seed, args.trials, violations, worst, constants, started)
    report["tol"] = args.tol
    _write_json(report, args.json)
    return EXIT_VIOLATION if violations else EXIT_OK


def _parse_grid(spec: str) -> list[float]:
    try:
        lo, hi, step = (float(x) for x in spec.split(":"))
    except ValueError as exc:
        raise InputError(f"grid must be lo:hi:step, got {spec!r}") from exc
    if step <= 0 or hi < lo:
        raise InputError(f"bad grid {spec!r}")
    n = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return [round(lo + k * step, 12) for k in range(n)]


def cmd_constants(args) -> int:
    if args.d is not None:
        if args.zeta is None:
            raise InputError("--d needs --zeta")
        zmax = approx_zeta_max(args.d)
        if not 0 <= args.zeta < zmax:
            raise InputError(f"zeta={args.zeta} must lie in [0, {zmax:.6g}) for d={args.d}")
        _write_csv(["d", "zeta", "beta_tilde", "zeta_max"],
                   [[args.d, args.zeta, repr(approx_beta(args.d, args.zeta)), repr(zmax)]], args.csv)
        return EXIT_OK
    if args.c is None or args.zeta_grid is None:
        raise InputError("give --c with --zeta-grid, or --d with --zeta")
    if args.c < 1:
        raise InputError("c must be at least 1")
    rows = []
    for z in _parse_grid(args.zeta_grid):
        if not 0 <= z < 1:
            raise InputError(f"grid value {z} outside [0, 1)")
        b = beta_c_zeta(args.c, z)
        rows.append([args.c, z, repr(b), int(b <= 0)])
    _write_csv(["c", "zeta", "beta", "trivial"], rows, args.csv)
    return EXIT_OK


def cmd_graph_certify(args) -> int:
    g = _graph(args.graph)
    try:
        cert = gm.cmlsi_certificate(g, path=args.path)
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    payload = {"schema": SCHEMA, "command": "graph-certify", "graph": args.graph,
               "n": g.n, "m": g.m, "edges": len(g.edges), **cert.as_dict()}
    code = EXIT_OK
    if args.simulate:
        if g.n > gm.QUANTUM_CAP:
            raise InputError(f"simulation is capped at n <= {gm.QUANTUM_CAP}")
        ext = args.trials if 2 * g.n <= gm.QUANTUM_CAP else 0
        env = gm.envelope_check(g, cert.lambda_cert, args.trials, ext, np.linspace(0, args.tmax, 40),
                                args.seed, args.tol)
        payload["envelope"] = env
        code = EXIT_OK if env["verdict"] == "pass" else EXIT_VIOLATION
    _write_json(payload, args.out)
    return code


def _unit(args) -> float:
    """Output scale: entropies are computed in nats and optionally reported in bits."""
    return 1 / math.log(2) if getattr(args, "bits", False) else 1.0


def cmd_uncertainty(args) -> int:
    if args.mub:
        bp = fourier_pair(args.dim)
    else:
        if args.angle is None:
            raise InputError("give --angle or --mub")
        bp = rotated_pair(args.angle, args.dim)
    rng = np.random.default_rng(args.seed)
    rows, bad = [], 0
    kinds = ("hilbert-schmidt", "pure", "rank-k")
    for t in range(args.trials):
        d = args.dim * args.bdim
        rho = random_density(d, kinds[t % 3], rng)
        if t % 4 == 3:
            s = rng.uniform(0, 0.2)
            rho = (1 - s) * np.eye(d) / d + s * rho
        try:
            qf = qf_uncertainty_bound(rho, bp)
        except ValueError as exc:
            raise InputError(str(exc)) from exc
        if args.bdim == 1:
            mu, ba = maassen_uffink_bound(rho, bp).rhs, bardet_bound(rho, bp).rhs
        else:
            mu = ba = float("nan")
        if qf.rhs > qf.lhs + args.tol:
            bad += 1
        k = _unit(args)
        rows.append([t, repr(qf.lhs * k), repr(mu * k), repr(ba * k), repr(qf.rhs * k)])
    _write_csv(["trial", "lhs", "rhs_mu", "rhs_bardet", "rhs_qf"], rows, args.csv)
    return EXIT_VIOLATION if bad else EXIT_OK


def cmd_decay(args) -> int:
    g = _graph(args.graph)
    b = args.extend or 1
    if g.n * b > gm.QUANTUM_CAP:
        raise InputError(f"n*b = {g.n * b} exceeds the simulation cap {gm.QUANTUM_CAP}")
    if args.points < 2 or args.tmax <= 0:
        raise InputError("need --points >= 2 and --tmax > 0")
    cert = gm.cmlsi_certificate(g)
    gen = gm.graph_lindbladian(g)
    e = gm.graph_expectation(g)
    if b > 1:
        gen, e = gm.extend_generator(gen, b), e.tensor_identity(b)
    rho = random_density(g.n * b, "hilbert-schmidt", np.random.default_rng(args.seed))
    times = np.linspace(0, args.tmax, args.points)
    curve = gm.decay_curve(gen, rho, e, times)
    env = np.exp(-cert.lambda_cert * times) * relative_entropy(rho, e(rho))
    k = _unit(args)
    rows = [[repr(float(t)), repr(float(v) * k), repr(float(x) * k)] for t, v, x in zip(times, curve.values, env)]
    _write_csv(["t", "D", "envelope"], rows, args.csv)
    ok = np.all(curve.values <= env + args.tol) and np.all(np.diff(curve.values) <= args.tol)
    return EXIT_OK if ok else EXIT_VIOLATION


# -- parser -----------------------------------------------------------------------


def _default_seed() -> int:
    try:
        return int(os.environ.get(SEED_ENV, "0"))
    except ValueError:
        return 0


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(EXIT_INPUT)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="quasifact", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    seed = _default_seed()

    v = sub.add_parser("verify", help="run a randomized inequality suite")
    v.add_argument("--suite", required=True, help="suite name or 'all'")
    v.add_argument("--dim", type=int, action="append", help="dimension (repeatable)")
    v.add_argument("--trials", type=int, default=100)
    v.add_argument("--seed", type=int, default=seed)
    v.add_argument("--tol", type=float, default=1e-8)
    v.add_argument("--json", help="report path (stdout if omitted)")
    v.set_defaults(func=cmd_verify)

    c = sub.add_parser("constants", help="tabulate comparison factors")
    c.add_argument("--c", type=float)
    c.add_argument("--zeta-grid")
    c.add_argument("--d", type=int)
    c.add_argument("--zeta", type=float)
    c.add_argument("--csv")
    c.set_defaults(func=cmd_constants)

    g = sub.add_parser("graph-certify", help="decay certificate for a graph Lindbladian")
    g.add_argument("--graph", required=True)
    g.add_argument("--out")
    g.add_argument("--path", choices=("auto", "expander", "choi"), default="expander",
                   help="expander: spectral sweep; choi: exact decomposition (n <= 16); auto: better of both")
    g.add_argument("--simulate", action="store_true")
    g.add_argument("--trials", type=int, default=20)
    g.add_argument("--tmax", type=float, default=10.0)
    g.add_argument("--seed", type=int, default=seed)
    g.add_argument("--tol", type=float, default=1e-8)
    g.set_defaults(func=cmd_graph_certify)

    u = sub.add_parser("uncertainty", help="compare entropic uncertainty bounds")
    u.add_argument("--dim", type=int, required=True)
    grp = u.add_mutually_exclusive_group(required=True)
    grp.add_argument("--angle", type=float)
    grp.add_argument("--mub", action="store_true")
    u.add_argument("--bdim", type=int, default=1, help="dimension of the memory system")
    u.add_argument("--trials", type=int, default=100)
    u.add_argument("--seed", type=int, default=seed)
    u.add_argument("--tol", type=float, default=1e-8)
    u.add_argument("--csv")
    u.add_argument("--bits", action="store_true", help="report entropies in bits")
    u.set_defaults(func=cmd_uncertainty)

    d = sub.add_parser("decay", help="simulate relative-entropy decay against the certificate")
    d.add_argument("--graph", required=True)
    d.add_argument("--tmax", type=float, default=10.0)
    d.add_argument("--points", type=int, default=40)
    d.add_argument("--seed", type=int, default=seed)
    d.add_argument("--extend", type=int, default=None)
    d.add_argument("--tol", type=float, default=1e-8)
    d.add_argument("--csv")
    d.add_argument("--bits", action="store_true", help="report entropies in bits")
    d.set_defaults(func=cmd_decay)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        sys.stderr.write(f"quasifact {args.command}: {exc}\n")
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
