"""Euler-integral solutions of the SLE commutation system.

The master integrand in ``n - 1`` variables ``u_i`` and ``2n`` ordered real
points ``x_j`` is

    prod_{i<j<2n} (x_j - x_i)^{2/k} prod_{j<2n} (x_2n - x_j)^{1-6/k}
    * prod_i [ prod_{j<2n} (u_i - x_j)^{-4/k} (u_i - x_2n)^{12/k-2} ]
    * prod_{i<l} (u_l - u_i)^{8/k}

and integrating it over a product of loops gives a solution.  Two loop
families are built: one Pochhammer loop per pair of a non-crossing pairing
(the pair containing ``x_2n`` gets none), and nested lassos anchored at
``x_2n`` (used at k = 2, where Pochhammer loops give zero).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from . import specialfn as sf
from .contour import (
    ContourError,
    ProductCycle,
    ProductIntegrand,
    ProductQuadrature,
    lasso_loop,
    paths_intersect,
    pochhammer_loop,
)
from .pairings import NonCrossingPairing, enumerate_noncrossing_pairings


@dataclass(frozen=True)
class Configuration:
    x: tuple
    kappa: float

    def __post_init__(self):
        x = tuple(float(v) for v in self.x)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "kappa", float(self.kappa))
        if len(x) < 2 or len(x) % 2:
            raise ValueError(f"need an even number >= 2 of points, got {len(x)}")
        if any(b <= a for a, b in zip(x[:-1], x[1:])):
            raise ValueError(f"points must be strictly increasing: {x}")
        if not self.kappa > 0:
            raise ValueError(f"kappa must be positive, got {self.kappa}")

    @property
    def n(self) -> int:
        return len(self.x) // 2

    def with_x(self, x) -> "Configuration":
        return Configuration(tuple(x), self.kappa)


def master_exponents(n: int, kappa: float):
    """Exponent tables ``(E, F)``: ``E[i, j]`` for ``(u_i - x_j)``, ``F[i, l]`` for ``(u_l - u_i)``, ``i < l``."""
    m = n - 1
    E = np.full((m, 2 * n), -4.0 / kappa)
    E[:, -1] = 12.0 / kappa - 2.0
    F = np.triu(np.full((m, m), 8.0 / kappa), 1)
    return E, F


def prefactor(x, kappa: float) -> float:
    x = np.asarray(x, dtype=float)
    last = x[-1]
    head = x[:-1]
    d = head[None, :] - head[:, None]
    iu = np.triu_indices(head.size, 1)
    lp = (2.0 / kappa) * np.sum(np.log(d[iu])) + (1.0 - 6.0 / kappa) * np.sum(np.log(last - head))
    return math.exp(lp)


def phi_n(cfg: Configuration, u) -> complex:
    """Master integrand at ``u`` (length ``n - 1``), principal branch of every factor."""
    u = np.atleast_1d(np.asarray(u, dtype=complex))
    n, k = cfg.n, cfg.kappa
    if u.size != n - 1:
        raise ValueError(f"expected {n - 1} integration variables, got {u.size}")
    x = np.asarray(cfg.x)
    if np.any(np.abs(u[:, None] - x[None]) == 0):
        raise ValueError("integration variable coincides with a marked point")
    if np.unique(u).size != u.size:
        raise ValueError("integration variables coincide")
    E, F = master_exponents(n, k)
    lg = np.sum(E * np.log(u[:, None] - x[None]))
    for i in range(n - 1):
        for l in range(i + 1, n - 1):
            lg += F[i, l] * np.log(u[l] - u[i])
    return complex(prefactor(x, k) * np.exp(lg))


def c_kappa(kappa: float) -> float:
    """Collapse constant ``4 pi^2 / (Gamma(2 - 8/k) Gamma(4/k)^2)``; undefined when ``8/k`` is a positive integer."""
    q = 8.0 / kappa
    if abs(q - round(q)) < 1e-12 and round(q) >= 1:
        raise ValueError(f"c_kappa undefined: 8/kappa = {round(q)} is a positive integer")
    return 4.0 * math.pi ** 2 / (sf.gamma(2.0 - q) * sf.gamma(4.0 / kappa) ** 2)


def c_kappa_sine_form(kappa: float) -> float:
    """Same constant as ``4 sin^2(4 pi/k) Gamma(1 - 4/k)^2 / Gamma(2 - 8/k)``."""
    q = 8.0 / kappa
    if abs(q - round(q)) < 1e-12 and round(q) >= 1:
        raise ValueError(f"c_kappa undefined: 8/kappa = {round(q)} is a positive integer")
    return 4.0 * math.sin(4.0 * math.pi / kappa) ** 2 * sf.gamma(1.0 - 4.0 / kappa) ** 2 / sf.gamma(2.0 - q)


# ---------------------------------------------------------------------------
# cycles


@dataclass(frozen=True)
class CycleSpec:
    """``kind="pairing"``: one Pochhammer loop per pair avoiding the last point.
    ``kind="nested"``: lassos from ``x_2n`` around ``x_{2n-i}``, ``i = 1..n-1``.
    ``kind="loops"``: Pochhammer loops around the explicit index pairs ``loops``.
    ``order`` optionally permutes which loop carries which variable."""

    kind: str = "pairing"
    pairing: NonCrossingPairing | None = None
    order: tuple | None = None
    loops: tuple | None = None

    def loop_pairs(self, n: int) -> list[tuple[int, int]]:
        if self.kind == "nested":
            pairs = [(2 * n - i, 2 * n) for i in range(1, n)]
        elif self.kind == "pairing":
            p = self.pairing if self.pairing is not None else enumerate_noncrossing_pairings(n)[0]
            if p.n != n:
                raise ValueError(f"pairing is for {2 * p.n} points, configuration has {2 * n}")
            pairs = [pr for pr in p.pairs() if pr[1] != 2 * n]
        elif self.kind == "loops":
            pairs = [tuple(sorted(int(v) for v in pr)) for pr in (self.loops or ())]
            if len(pairs) != n - 1:
                raise ValueError(f"need {n - 1} loops for {2 * n} points, got {len(pairs)}")
            for a, b in pairs:
                if not 1 <= a < b <= 2 * n:
                    raise ValueError(f"loop pair {(a, b)} out of range")
        else:
            raise ValueError(f"unknown cycle kind {self.kind!r}")
        if self.order is not None:
            if sorted(self.order) != list(range(len(pairs))):
                raise ValueError(f"order {self.order} is not a permutation of {len(pairs)} loops")
            pairs = [pairs[i] for i in self.order]
        return pairs


def _local_gaps(x):
    x = np.asarray(x)
    g = np.diff(x)
    left = np.concatenate([[np.inf], g])
    right = np.concatenate([g, [np.inf]])
    return np.minimum(left, right)


def loop_clearances(x, spec: CycleSpec) -> list[float]:
    """Per-loop clearance: a quarter of the smallest gap next to either loop point."""
    n = len(x) // 2
    gaps = _local_gaps(x)
    out = []
    for a, b in spec.loop_pairs(n):
        if spec.kind == "nested":
            out.append(0.25 * gaps[a - 1])
        else:
            out.append(0.25 * min(gaps[a - 1], gaps[b - 1]))
    return out


def build_cycle(x, spec: CycleSpec, clearances=None, check: bool = True) -> ProductCycle:
    x = [float(v) for v in x]
    n = len(x) // 2
    pairs = spec.loop_pairs(n)
    rs = loop_clearances(x, spec) if clearances is None else list(clearances)
    paths = []
    for (a, b), r in zip(pairs, rs):
        if spec.kind == "nested":
            paths.append(lasso_loop(x[b - 1], x[a - 1], r))
        else:
            paths.append(pochhammer_loop(x[a - 1], x[b - 1], r))
    if check and len(paths) > 1:
        if spec.kind == "nested":
            if paths_intersect(paths, ignore=[x[-1]], tol=0.5 * min(rs)):
                raise ContourError("lasso loops intersect")
        elif paths_intersect(paths):
            raise ContourError("loops of the product cycle intersect")
    return ProductCycle(tuple(paths))


def master_integrand(cfg: Configuration) -> ProductIntegrand:
    E, F = master_exponents(cfg.n, cfg.kappa)
    return ProductIntegrand(np.asarray(cfg.x, dtype=complex), E, F)


class EulerIntegral:
    """Euler integral with a panel schedule frozen at a reference configuration.

    Calling the object at nearby points reuses the loop clearances and the
    quadrature schedule, so the result is a smooth function of ``x`` and
    finite differences see no adaptive jitter.
    """

    def __init__(self, cfg: Configuration, spec: CycleSpec | None = None, tol: float = 1e-10):
        self.cfg = cfg
        self.spec = spec or CycleSpec()
        self.tol = tol
        self.n = cfg.n
        if self.n == 1:
            self.clearances, self.schedules, self.error = [], (), 0.0
            return
        self.clearances = loop_clearances(cfg.x, self.spec)
        cyc = build_cycle(cfg.x, self.spec, self.clearances)
        q = ProductQuadrature(master_integrand(cfg), cyc, tol)
        self.schedules = q.schedules
        val, err = q.integrate_with_error()
        self.reference = complex(prefactor(cfg.x, cfg.kappa) * val)
        self.error = float(prefactor(cfg.x, cfg.kappa) * err)

    def integral(self, x=None) -> complex:
        x = self.cfg.x if x is None else tuple(float(v) for v in x)
        cfg = self.cfg.with_x(x)
        if self.n == 1:
            return complex(prefactor(x, cfg.kappa))
        cyc = build_cycle(x, self.spec, self.clearances, check=False)
        q = ProductQuadrature(master_integrand(cfg), cyc, self.tol, schedules=self.schedules)
        return complex(prefactor(x, cfg.kappa) * q.integrate())

    __call__ = integral


def euler_solution(cfg: Configuration, spec: CycleSpec | None = None, tol: float = 1e-10) -> complex:
    """``int_C phi_n du`` over the product cycle described by ``spec``."""
    return EulerIntegral(cfg, spec, tol).integral()


# ---------------------------------------------------------------------------
# collapse limit and the non-intersection probability


def _richardson(eps, vals):
    """Value at eps = 0 of the interpolating polynomial (Neville)."""
    e = list(eps)
    p = list(vals)
    m = len(e)
    for j in range(1, m):
        for i in range(m - 1, j - 1, -1):
            p[i] = (e[i - j] * p[i] - e[i] * p[i - 1]) / (e[i - j] - e[i])
    return p[-1]


def reduced_pairing(p: NonCrossingPairing, k: int) -> NonCrossingPairing:
    """Pairing on ``2n - 2`` points obtained by deleting the pair ``(k, k+1)``."""
    if p(k) != k + 1:
        raise ValueError(f"points {k} and {k + 1} are not paired")

    def relabel(v):
        return v if v < k else v - 2

    return NonCrossingPairing.from_pairs([(relabel(a), relabel(b)) for a, b in p.pairs() if a != k])


@dataclass
class CollapseReport:
    eps: list
    scaled: list
    limit: float
    expected: float
    rel_error: float
    passed: bool

    def to_json(self) -> str:
        return json.dumps(self.__dict__)


def collapse_limit_check(cfg: Configuration, pairing: NonCrossingPairing, k: int, tol: float = 1e-3,
                         eps=(1e-2, 3e-3, 1e-3, 3e-4, 1e-4), quad_tol: float = 1e-11) -> CollapseReport:
    """Collapse ``x_{k+1}`` onto ``x_k`` and compare
    ``lim eps^{6/kappa-1} |int_C phi_n|`` with ``|c_kappa| |int phi_{n-1}|``.

    ``x_{k+1}`` is placed at ``x_k + eps``; the remaining points stay put.
    The limit is extrapolated by polynomial (Richardson) extrapolation in eps.
    """
    n, kap = cfg.n, cfg.kappa
    if not 1 <= k < 2 * n - 1:
        raise ValueError(f"k must satisfy 1 <= k and k + 1 < 2n, got k={k}, 2n={2 * n}")
    if pairing(k) != k + 1:
        raise ValueError(f"points {k} and {k + 1} are not paired")
    x = list(cfg.x)
    spec = CycleSpec("pairing", pairing)
    scaled = []
    for e in eps:
        xe = x.copy()
        xe[k] = x[k - 1] + e
        if not xe[k] < (x[k + 1] if k + 1 < len(x) else math.inf):
            raise ValueError("eps too large for the configuration")
        val = euler_solution(cfg.with_x(xe), spec, quad_tol)
        scaled.append(e ** (6.0 / kap - 1.0) * abs(val))
    limit = _richardson(list(eps), scaled)
    xr = x[:k - 1] + x[k + 1:]
    if n == 2:
        inner = (xr[1] - xr[0]) ** (1.0 - 6.0 / kap)
    else:
        inner = abs(euler_solution(Configuration(tuple(xr), kap), CycleSpec("pairing", reduced_pairing(pairing, k)), quad_tol))
    expected = abs(c_kappa(kap)) * inner
    rel = abs(limit - expected) / abs(expected)
    return CollapseReport(list(eps), scaled, float(limit), float(expected), float(rel), bool(rel <= tol))


def bounded_cycle_constant(kappa: float) -> float:
    """Modulus ratio between the bounded n = 2 loop integral and the normalized solution.

    Equals ``|c_kappa sin(12 pi/kappa) / sin(8 pi/kappa)|``; it vanishes when
    ``12/kappa`` is an integer, where the loop integral is identically zero.
    """
    s12 = sf.sinpi(12.0 / kappa).real
    s8 = sf.sinpi(8.0 / kappa).real
    if abs(s12) < 1e-12:
        raise ValueError(f"the bounded loop integral vanishes identically at kappa={kappa}")
    return abs(c_kappa(kappa) * s12 / s8)


def bounded_cycle_n2(pairing: NonCrossingPairing) -> CycleSpec:
    """Loop around ``x_4`` and its neighbour not paired with it.

    For four points this integral is a constant multiple, of modulus
    ``bounded_cycle_constant(kappa)``, of the closed-form solution vanishing
    when unpaired neighbours merge.
    """
    if pairing.n != 2:
        raise ValueError("bounded_cycle_n2 is for four points")
    other = 1 if pairing(4) == 3 else 3
    return CycleSpec("loops", loops=((other, 4),))


def psi_nonintersection(cfg: Configuration, pairing: NonCrossingPairing, tol: float = 1e-10, order=None,
                        cycle: CycleSpec | None = None) -> float:
    """``N^{-1} prod_pairs (b - a)^{6/kappa-1} |int_C phi_n|`` for kappa in (0, 8/3).

    By default ``C`` is the product of Pochhammer loops around the pairs of
    ``pairing`` that avoid ``x_2n`` and ``N = |c_kappa|^{n-1}``.  With
    ``cycle=bounded_cycle_n2(pairing)`` the bounded four-point solution is
    returned, normalized by ``bounded_cycle_constant``.  Other cycles have no
    known normalization and are rejected.
    """
    kap = cfg.kappa
    if not 0 < kap < 8.0 / 3.0:
        raise ValueError(f"psi_nonintersection needs kappa in (0, 8/3), got {kap}")
    q = 8.0 / kap
    if abs(q - round(q)) < 1e-12:
        raise ValueError(f"8/kappa = {round(q)} is an integer")
    n = cfg.n
    if n == 1:
        return 1.0
    x = cfg.x
    if cycle is None or (cycle.kind == "pairing" and cycle.pairing in (None, pairing)):
        spec = CycleSpec("pairing", pairing, order if cycle is None else cycle.order)
        lp = (1 - n) * math.log(abs(c_kappa(kap)))
    elif n == 2 and cycle == bounded_cycle_n2(pairing):
        spec = cycle
        lp = -math.log(bounded_cycle_constant(kap))
    else:
        raise ValueError("no normalization is known for this cycle")
    val = euler_solution(cfg, spec, tol)
    for a, b in pairing.pairs():
        lp += (6.0 / kap - 1.0) * math.log(x[b - 1] - x[a - 1])
    return math.exp(lp) * abs(val)


def solution_json(cfg: Configuration, pairing: NonCrossingPairing, integral: complex, psi: float | None) -> dict:
    return {
        "kappa": cfg.kappa,
        "x": list(cfg.x),
        "pairing": [list(pr) for pr in pairing.pairs()],
        "psi": psi,
        "integral": {"re": integral.real, "im": integral.imag},
    }
