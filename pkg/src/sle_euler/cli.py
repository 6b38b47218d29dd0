"""Command-line interface: ``sle-euler <command> [options]``.

Every command prints one JSON document (or CSV with ``--format csv``).
Exit status: 0 success, 2 invalid input, 3 numerical failure or failed check.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time

import numpy as np

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 2, 3


class CheckFailed(ArithmeticError):
    """A verification ran but did not pass."""

    def __init__(self, payload):
        super().__init__("check failed")
        self.payload = payload


def _round(obj):
    if isinstance(obj, float):
        return float(f"{obj:.15g}") if math.isfinite(obj) else obj
    if isinstance(obj, complex):
        return {"re": _round(obj.real), "im": _round(obj.imag)}
    if isinstance(obj, (np.floating,)):
        return _round(float(obj))
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return _round(obj.tolist())
    if isinstance(obj, dict):
        return {str(k): _round(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round(v) for v in obj]
    return obj


def _rows(obj):
    if isinstance(obj, dict) and isinstance(obj.get("rows"), list):
        return obj["rows"]
    if isinstance(obj, dict):
        return [{k: (json.dumps(v) if isinstance(v, (dict, list)) else v) for k, v in obj.items()}]
    return [{"value": obj}]


def emit(obj, fmt: str, out=None) -> None:
    out = sys.stdout if out is None else out
    obj = _round(obj)
    if fmt == "csv":
        rows = _rows(obj)
        keys = list(dict.fromkeys(k for r in rows for k in r))
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=keys, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: (json.dumps(v) if isinstance(v, (dict, list)) else v) for k, v in r.items()})
        out.write(buf.getvalue())
    else:
        out.write(json.dumps(obj) + "\n")


def _parse_pairing(text: str, n: int | None = None):
    from .pairings import NonCrossingPairing, enumerate_noncrossing_pairings

    if text is None:
        return enumerate_noncrossing_pairings(n)[0]
    pairs = []
    for item in text.split(","):
        a, b = item.split("-")
        pairs.append((int(a), int(b)))
    return NonCrossingPairing.from_pairs(pairs)


def _default_x(n: int) -> list[float]:
    return [float(k) for k in range(2 * n)]


# ---------------------------------------------------------------------------
# commands


def cmd_crossing(a):
    from .specialfn import chordal_crossing

    return {"psi": chordal_crossing(a.r, a.kappa)}


def cmd_pairings(a):
    from .pairings import catalan, enumerate_noncrossing_pairings, pairing_to_partition

    if a.count:
        return {"catalan": catalan(a.n)}
    rows = []
    for i, p in enumerate(enumerate_noncrossing_pairings(a.n)):
        rows.append({"index": i, "pairs": [list(pr) for pr in p.pairs()],
                     "blue_blocks": [list(b) for b in pairing_to_partition(p).blocks]})
    return {"n": a.n, "rows": rows}


def cmd_hexagon(a):
    from .hexagon import SymmetricHexConfig, event_probabilities

    cfg = SymmetricHexConfig(math.radians(a.theta))
    return {"theta": a.theta, "w": cfg.w, **event_probabilities(cfg)}


def cmd_fomin(a):
    from .fomin import fomin_density, fomin_determinant

    out = {"determinant": fomin_determinant(a.x, a.y)}
    try:
        out["density"] = fomin_density(a.x, a.y)
    except ValueError:
        out["density"] = None
    return out


def cmd_ust(a):
    from .ust import period_matrix, psi_ust, vandermonde_quarter

    x = a.x
    P = period_matrix(x, a.tol)
    return {"x": x, "psi": psi_ust(x, a.tol), "det": complex(np.linalg.det(P)),
            "vandermonde_quarter": vandermonde_quarter(x),
            "period_matrix": [[complex(v) for v in row] for row in P]}


def cmd_euler(a):
    from .euler import (Configuration, CycleSpec, bounded_cycle_n2, euler_solution, psi_nonintersection,
                        solution_json)

    cfg = Configuration(tuple(a.x), a.kappa)
    pairing = _parse_pairing(a.pairing, cfg.n)
    if a.cycle == "pairing":
        spec = CycleSpec("pairing", pairing)
    elif a.cycle == "nested":
        spec = CycleSpec("nested")
    else:
        spec = bounded_cycle_n2(pairing)
    val = euler_solution(cfg, spec, a.tol)
    psi = None
    if a.cycle != "nested" and 0 < a.kappa < 8 / 3 and abs(8 / a.kappa - round(8 / a.kappa)) > 1e-12:
        psi = psi_nonintersection(cfg, pairing, a.tol, cycle=spec)
    out = solution_json(cfg, pairing, val, psi)
    out["cycle"] = a.cycle
    return out


def _annihilation_target(case: str, n: int, kappa: float | None, x):
    if case == "euler":
        from .euler import Configuration, CycleSpec, EulerIntegral

        kappa = 3.0 if kappa is None else kappa
        ev = EulerIntegral(Configuration(tuple(x), kappa), CycleSpec("pairing"), 1e-12)
        ref = ev.reference
        phase = ref / abs(ref)
        return (lambda z: (ev(z) / phase).real), kappa
    if case == "kappa2-det":
        from .fomin import fomin_determinant

        return (lambda z: fomin_determinant(z[:n], z[n:][::-1])), 2.0
    if case == "ust":
        from .ust import PsiUST

        return PsiUST(x), 8.0
    raise ValueError(f"unknown case {case!r}")


def cmd_verify(a):
    t0 = time.perf_counter()
    n = a.n
    x = np.array(a.x if a.x else _default_x(n), dtype=float)
    if x.size != 2 * n:
        raise ValueError(f"--x needs {2 * n} values")
    if a.check == "annihilation":
        from .holonomy import verify_annihilation

        f, kappa = _annihilation_target(a.case, n, a.kappa, x)
        rep = verify_annihilation(f, x, kappa)
        orders = [v for v in rep.orders.values() if v is not None]
        out = {"check": "annihilation", "case": a.case, "kappa": kappa, "n": n, "pass": rep.passed,
               "order": min(orders) if orders else None, "orders": rep.orders, "residuals": rep.residuals}
    elif a.check == "lemma":
        from .holonomy import lemma_check

        kappa = 3.0 if a.kappa is None else a.kappa
        rng = np.random.default_rng(a.seed)
        re = np.sort(x[0] + (x[-1] - x[0]) * rng.random(n - 1))
        u = re + 1j * (0.5 + rng.random(n - 1))
        reps = [lemma_check(x, u, kappa, k) for k in range(1, 2 * n + 1)]
        orders = [r.order for r in reps if r.order is not None]
        out = {"check": "lemma", "kappa": kappa, "n": n, "pass": all(r.passed for r in reps),
               "order": min(orders) if orders else None, "orders": [r.order for r in reps]}
    elif a.check == "collapse":
        from .euler import Configuration, collapse_limit_check
        from .pairings import enumerate_noncrossing_pairings

        kappa = 3.0 if a.kappa is None else a.kappa
        pairing = _parse_pairing(a.pairing, n) if a.pairing else enumerate_noncrossing_pairings(n)[0]
        k = next(j for j in range(1, 2 * n) if pairing(j) == j + 1 and j + 1 != 2 * n)
        rep = collapse_limit_check(Configuration(tuple(x), kappa), pairing, k)
        out = {"check": "collapse", "kappa": kappa, "n": n, "pair": [k, k + 1], "pass": rep.passed,
               "limit": rep.limit, "expected": rep.expected, "rel_error": rep.rel_error}
    elif a.check == "ust-identities":
        from .ust import verify_drift_identity, verify_omega_recursion

        reps = [verify_omega_recursion(x), verify_drift_identity(x)]
        out = {"check": "ust-identities", "n": n, "pass": all(r.passed for r in reps),
               "residuals": {r.name: r.residual for r in reps}}
    elif a.check == "kappa-inf":
        from .holonomy import certify_kappa_inf_dimension

        c = certify_kappa_inf_dimension(n)
        out = {"check": "kappa-inf", "n": n, "pass": c.certified, "dimension": c.rank_lower,
               "upper_bound": c.dim_upper, "catalan": c.catalan}
    else:
        raise ValueError(a.check)
    out["seconds"] = time.perf_counter() - t0
    if not out["pass"]:
        raise CheckFailed(out)
    return out


def cmd_mc(a):
    from . import lattice

    if a.model == "percolation":
        if a.domain:
            with open(a.domain) as fh:
                dom = lattice.domain_from_json(fh.read())
        elif a.preset == "lozenge":
            dom = lattice.lozenge_domain(a.mesh)
        else:
            dom = lattice.regular_hexagon_domain(a.mesh)
        est = lattice.estimate_event_probabilities(dom, a.n_samples, a.seed)
        rows = [{"blocks": [list(b) for b in part.blocks], "count": int(c), "frequency": float(f),
                 "stderr": float(s)}
                for part, c, f, s in zip(est.partitions, est.counts, est.frequencies, est.stderr)]
        return {"model": "percolation", "n_samples": a.n_samples, "seed": a.seed, "sites": dom.n_sites,
                "rows": rows}
    if a.domain:
        with open(a.domain) as fh:
            dom = lattice.domain_from_json(fh.read())
    else:
        dom = lattice.square_grid_domain(a.size)
    xs = [(int(c), 0) for c in a.x]
    ys = [(int(c), 1) for c in a.y]
    est = lattice.fomin_event_estimate(dom, xs, ys, a.n_samples, a.seed)
    return {"model": "fomin", "n_samples": est.n_samples, "seed": a.seed, "hits": est.hits,
            "frequency": est.frequency, "stderr": est.stderr, "determinant": est.determinant}


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--tol", type=float, default=1e-10)

    p = argparse.ArgumentParser(prog="sle-euler", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("crossing", parents=[common], help="n=2 crossing probability at a cross-ratio")
    s.add_argument("--r", type=float, required=True)
    s.add_argument("--kappa", type=float, required=True)
    s.set_defaults(func=cmd_crossing)

    s = sub.add_parser("pairings", parents=[common], help="non-crossing pairings of 2n points")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--count", action="store_true")
    s.set_defaults(func=cmd_pairings)

    s = sub.add_parser("hexagon", parents=[common], help="kappa=6 symmetric hexagon events")
    s.add_argument("--theta", type=float, required=True, help="angle of u in degrees, in (0, 120)")
    s.set_defaults(func=cmd_hexagon)

    s = sub.add_parser("fomin", parents=[common], help="kappa=2 determinant and density")
    s.add_argument("--x", type=float, nargs="+", required=True)
    s.add_argument("--y", type=float, nargs="+", required=True)
    s.set_defaults(func=cmd_fomin)

    s = sub.add_parser("ust", parents=[common], help="kappa=8 period determinant")
    s.add_argument("--x", type=float, nargs="+", required=True)
    s.set_defaults(func=cmd_ust, tol=1e-12)

    s = sub.add_parser("euler", parents=[common], help="Euler integral over a product cycle")
    s.add_argument("--kappa", type=float, required=True)
    s.add_argument("--x", type=float, nargs="+", required=True)
    s.add_argument("--pairing", help="pairs as 1-4,2-3")
    s.add_argument("--cycle", choices=("pairing", "nested", "bounded"), default="pairing")
    s.set_defaults(func=cmd_euler)

    s = sub.add_parser("verify", parents=[common], help="finite-difference and exact checks")
    s.add_argument("check", choices=("annihilation", "lemma", "collapse", "ust-identities", "kappa-inf"))
    s.add_argument("--case", choices=("euler", "kappa2-det", "ust"), default="euler")
    s.add_argument("--n", type=int, default=2)
    s.add_argument("--kappa", type=float)
    s.add_argument("--x", type=float, nargs="+")
    s.add_argument("--pairing")
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("mc", parents=[common], help="lattice Monte Carlo")
    s.add_argument("model", choices=("percolation", "fomin"))
    s.add_argument("--domain", help="domain description (JSON file)")
    s.add_argument("--preset", choices=("lozenge", "hexagon"), default="hexagon")
    s.add_argument("--mesh", type=float, default=0.02)
    s.add_argument("--size", type=int, default=40, help="square grid side for the fomin model")
    s.add_argument("--x", type=int, nargs="+", help="bottom-side columns of the targets")
    s.add_argument("--y", type=int, nargs="+", help="columns of the starting sites (row 1)")
    s.add_argument("--n-samples", type=int, default=10000)
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_mc)
    return p


def run(argv=None, out=None) -> int:
    parser = build_parser()
    try:
        a = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if e.code is not None else EXIT_OK
    if a.command == "mc" and a.model == "fomin" and (not a.x or not a.y):
        parser.print_usage(sys.stderr)
        sys.stderr.write("mc fomin needs --x and --y\n")
        return EXIT_INPUT
    try:
        result = a.func(a)
    except CheckFailed as e:
        emit(e.payload, a.format, out)
        return EXIT_NUMERIC
    except ArithmeticError as e:
        sys.stderr.write(f"numerical failure: {e}\n")
        return EXIT_NUMERIC
    except (ValueError, KeyError, IndexError, OSError) as e:
        sys.stderr.write(f"invalid input: {e}\n")
        return EXIT_INPUT
    emit(result, a.format, out)
    return EXIT_OK


def main() -> None:
    sys.exit(run())
