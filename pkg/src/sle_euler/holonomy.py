"""Operators of the SLE commutation system, finite-difference annihilation checks,
the divergence identities satisfied by the master integrand, and the exact
kappa -> infinity polynomial solution space.

With ``h = 1 - 6/kappa`` the system on functions of ``x_1 < ... < x_2n`` is

    L_k   = (kappa/2) d_kk + sum_{l!=k} 2 d_l / (x_l - x_k) + ((kappa-6)/kappa) sum_{l!=k} 1/(x_l - x_k)^2
    l_-1  = sum_k d_k
    l_0   = sum_k x_k d_k - n h
    l_1   = sum_k x_k^2 d_k - h sum_k x_k
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations

import numpy as np

from .pairings import catalan, enumerate_noncrossing_pairings


@dataclass(frozen=True)
class SystemOperator:
    """``kind`` is ``"L"`` (with 1-based ``k``), ``"l-1"``, ``"l0"`` or ``"l1"``."""

    kind: str
    kappa: float
    n: int
    k: int | None = None

    def __post_init__(self):
        if self.kind not in ("L", "l-1", "l0", "l1"):
            raise ValueError(f"unknown operator kind {self.kind!r}")
        if self.kind == "L" and not (self.k is not None and 1 <= self.k <= 2 * self.n):
            raise ValueError(f"L_k needs 1 <= k <= {2 * self.n}, got {self.k}")

    @property
    def name(self) -> str:
        return f"L{self.k}" if self.kind == "L" else self.kind


def system_operators(kappa: float, n: int) -> list[SystemOperator]:
    """All ``2n + 3`` operators of the system."""
    ops = [SystemOperator("L", kappa, n, k) for k in range(1, 2 * n + 1)]
    return ops + [SystemOperator(kd, kappa, n) for kd in ("l-1", "l0", "l1")]


def _derivatives(f, x, h, second_index=None):
    x = np.asarray(x, dtype=float)
    m = x.size
    f0 = f(x)
    d1 = []
    for l in range(m):
        e = np.zeros(m)
        e[l] = h
        fp, fm = f(x + e), f(x - e)
        d1.append((fp - fm) / (2 * h))
        if l == second_index:
            d2 = (fp - 2 * f0 + fm) / h ** 2
    if second_index is None:
        d2 = None
    return f0, d1, d2


def operator_terms(op: SystemOperator, f, x, h: float) -> list:
    """The individual terms of ``op f`` at ``x`` by central differences; their sum is ``op f``."""
    x = np.asarray(x, dtype=float)
    m = x.size
    if m != 2 * op.n:
        raise ValueError(f"operator is for {2 * op.n} points, got {m}")
    if np.any(np.diff(x) <= 0):
        raise ValueError("points must be strictly increasing")
    gap = float(np.min(np.diff(x)))
    if not 0 < h < gap / 10:
        raise ValueError(f"step {h} must be below a tenth of the minimum gap {gap}")
    kap = op.kappa
    hw = 1.0 - 6.0 / kap
    if op.kind == "L":
        k = op.k - 1
        f0, d1, d2 = _derivatives(f, x, h, second_index=k)
        terms = [0.5 * kap * d2]
        for l in range(m):
            if l != k:
                terms.append(2.0 * d1[l] / (x[l] - x[k]))
                terms.append((kap - 6.0) / kap * f0 / (x[l] - x[k]) ** 2)
        return terms
    f0, d1, _ = _derivatives(f, x, h)
    if op.kind == "l-1":
        return list(d1)
    if op.kind == "l0":
        return [x[l] * d1[l] for l in range(m)] + [-op.n * hw * f0]
    return [x[l] ** 2 * d1[l] for l in range(m)] + [-hw * float(np.sum(x)) * f0]


def apply_operator(op: SystemOperator, f, x, h: float):
    """Central finite-difference value of ``op f`` at ``x``."""
    return sum(operator_terms(op, f, x, h))


@dataclass
class AnnihilationReport:
    steps: list
    residuals: dict                  # name -> list of relative residuals per step
    orders: dict                     # name -> fitted order (None when at the noise floor)
    passed: bool
    noise_floor: float = 1e-9
    per_operator: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps({
            "pass": self.passed, "steps": self.steps, "residuals": self.residuals,
            "orders": self.orders, "per_operator": self.per_operator, "noise_floor": self.noise_floor,
        })

    @property
    def order(self) -> float | None:
        """Smallest fitted order over operators that are above the noise floor."""
        vals = [v for v in self.orders.values() if v is not None]
        return min(vals) if vals else None


def fit_order(steps, residuals) -> float:
    """Least-squares slope of ``log residual`` against ``log h``."""
    lh = np.log(np.asarray(steps, dtype=float))
    lr = np.log(np.maximum(np.asarray(residuals, dtype=float), 1e-300))
    A = np.vstack([lh, np.ones_like(lh)]).T
    slope, _ = np.linalg.lstsq(A, lr, rcond=None)[0]
    return float(slope)


def verify_annihilation(f, x, kappa: float, steps=None, operators=None, min_order: float = 1.8,
                        noise_floor: float = 1e-9) -> AnnihilationReport:
    """Apply the system to ``f`` at ``x`` with decreasing steps and fit convergence orders.

    Residuals are relative: ``|op f| / sum |terms|``.  An operator passes when
    the fitted order is at least ``min_order`` or when every residual lies
    below ``noise_floor`` (exact annihilation up to rounding).  ``steps``
    default to ``{1e-2, 1e-3}`` times the minimum gap.
    """
    x = np.asarray(x, dtype=float)
    n = x.size // 2
    gap = float(np.min(np.diff(x)))
    steps = [1e-2 * gap, 1e-3 * gap] if steps is None else [float(s) for s in steps]
    ops = system_operators(kappa, n) if operators is None else operators
    residuals, orders, per_op = {}, {}, {}
    ok_all = True
    for op in ops:
        res = []
        for h in steps:
            terms = operator_terms(op, f, x, h)
            scale = sum(abs(t) for t in terms)
            res.append(float(abs(sum(terms)) / scale) if scale > 0 else 0.0)
        residuals[op.name] = res
        if max(res) <= noise_floor:
            orders[op.name] = None
            ok = True
        else:
            orders[op.name] = fit_order(steps, res) if len(steps) > 1 else None
            ok = orders[op.name] is not None and orders[op.name] >= min_order
        per_op[op.name] = bool(ok)
        ok_all &= ok
    return AnnihilationReport(steps, residuals, orders, bool(ok_all), noise_floor, per_op)


# ---------------------------------------------------------------------------
# divergence identities for the master integrand


def _phi_log(x, u, kappa):
    # principal-branch log of the master integrand; x real, u complex
    x = np.asarray(x, dtype=complex)
    u = np.asarray(u, dtype=complex)
    n = x.size // 2
    val = np.sum((-4.0 / kappa) * np.log(u[:, None] - x[None, :-1]))
    val += (12.0 / kappa - 2.0) * np.sum(np.log(u - x[-1]))
    for i in range(u.size):
        for l in range(i + 1, u.size):
            val += (8.0 / kappa) * np.log(u[l] - u[i])
    xr = x.real
    for j1 in range(2 * n - 1):
        for j2 in range(j1 + 1, 2 * n - 1):
            val += (2.0 / kappa) * math.log(xr[j2] - xr[j1])
    val += (1.0 - 6.0 / kappa) * np.sum(np.log(xr[-1] - xr[:-1]))
    return val


def _phi(x, u, kappa):
    return np.exp(_phi_log(x, u, kappa))


def lemma_flux(x, u, kappa, k: int, i: int) -> complex:
    """Coefficient ``A_i`` with ``L_k phi = -sum_i d/du_i (A_i phi)``; ``k`` is 1-based."""
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=complex)
    n = x.size // 2
    if k < 2 * n:
        return 2.0 / (u[i] - x[k - 1])
    xl = x[-1]
    prod = np.prod((u[i] - x[:-1]) / (xl - x[:-1]))
    for j in range(u.size):
        if j != i:
            prod *= ((xl - u[j]) / (u[i] - u[j])) ** 2
    return 2.0 / (u[i] - xl) + (kappa - 8.0) / (u[i] - xl) * prod


@dataclass
class LemmaReport:
    k: int
    steps: list
    residuals: list
    order: float | None
    passed: bool


def lemma_check(x, u, kappa: float, k: int, steps=None, min_order: float = 1.8,
                noise_floor: float = 1e-10) -> LemmaReport:
    """Finite-difference check of ``L_k phi = -sum_i d_{u_i}(A_i phi)`` at one point.

    ``L_k`` acts on ``x`` with ``u`` fixed, the divergence on ``u`` with ``x``
    fixed; both by central differences with the same step.  The ``u`` should
    sit off the real axis with increasing real parts so that no principal
    branch cut is crossed.
    """
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=complex)
    gap = float(np.min(np.diff(x)))
    steps = [1e-2 * gap, 3e-3 * gap, 1e-3 * gap] if steps is None else list(steps)
    n = x.size // 2
    op = SystemOperator("L", kappa, n, k)
    res = []
    for h in steps:
        terms = operator_terms(op, lambda xx: _phi(xx, u, kappa), x, h)
        lhs = sum(terms)
        div = 0j
        for i in range(u.size):
            def g(ui, i=i):
                uu = u.copy()
                uu[i] = ui
                return lemma_flux(x, uu, kappa, k, i) * _phi(x, uu, kappa)
            div += (g(u[i] + h) - g(u[i] - h)) / (2 * h)
        scale = sum(abs(t) for t in terms) + abs(div)
        res.append(float(abs(lhs + div) / scale))
    if max(res) <= noise_floor:
        return LemmaReport(k, steps, res, None, True)
    order = fit_order(steps, res)
    return LemmaReport(k, steps, res, order, bool(order >= min_order))


# ---------------------------------------------------------------------------
# kappa -> infinity: multilinear translation-invariant solutions
#
# A polynomial is a dict {frozenset of variable indices (0-based): integer coefficient};
# multilinear monomials only.


def _poly_mul_linear(p: dict, a: int, b: int) -> dict:
    # p * (x_a - x_b)
    out: dict = {}
    for mono, c in p.items():
        if a not in mono:
            key = mono | {a}
            out[key] = out.get(key, 0) + c
        if b not in mono:
            key = mono | {b}
            out[key] = out.get(key, 0) - c
    return {k: v for k, v in out.items() if v}


def matching_polynomial(pairs) -> dict:
    """``prod (x_a - x_b)`` over the pairs (1-based indices ``a < b`` or any order)."""
    p = {frozenset(): 1}
    for a, b in pairs:
        p = _poly_mul_linear(p, a - 1, b - 1)
    return p


def all_matchings(m: int):
    """All perfect matchings of ``1..m`` (the orbit of ``(x_1 - x_{n+1})...(x_n - x_2n)`` up to sign)."""
    yield from _matchings_of(list(range(1, m + 1)))


def _matchings_of(items):
    if not items:
        yield []
        return
    a = items[0]
    for j in items[1:]:
        others = [v for v in items[1:] if v != j]
        for sub in _matchings_of(others):
            yield [(a, j)] + sub


def kappa_inf_basis(n: int) -> list[dict]:
    """Products over non-crossing matchings: a basis of the span of the symmetric-group
    orbit of ``(x_1 - x_{n+1}) ... (x_n - x_2n)``.  Independence and spanning are
    certified by ``certify_kappa_inf_dimension``."""
    if not 1 <= n <= 8:
        raise ValueError(f"n must be in 1..8, got {n}")
    return [matching_polynomial(p.pairs()) for p in enumerate_noncrossing_pairings(n)]


def kappa_inf_residuals(p: dict, m: int) -> dict:
    """Number of nonzero coefficients of ``p`` under the four limiting operators
    ``d_kk``, ``sum d_k``, ``sum x_k d_k - deg`` and ``sum x_k^2 d_k - sum x_k``,
    computed in exact integer arithmetic.  All zero means annihilated.
    """
    degs = {len(mono) for mono in p}
    if len(degs) > 1:
        raise ValueError("polynomial is not homogeneous")
    deg = degs.pop() if degs else 0
    # sum_k d_k
    d = {}
    for mono, c in p.items():
        for k in mono:
            key = mono - {k}
            d[key] = d.get(key, 0) + c
    d = {k: v for k, v in d.items() if v}
    # sum_k x_k d_k - deg: Euler operator on homogeneous polynomial
    e = {mono: c * (len(mono) - deg) for mono, c in p.items()}
    e = {k: v for k, v in e.items() if v}
    # sum_k x_k^2 d_k - sum_k x_k  (weight 1 per point: the kappa -> infinity limit of 1 - 6/kappa)
    s: dict = {}
    for mono, c in p.items():
        for k in mono:
            key = ("sq", k, mono - {k})
            s[key] = s.get(key, 0) + c
        for k in range(m):
            if k in mono:
                key = ("sq", k, mono - {k})
            else:
                key = ("lin", mono | {k})
            s[key] = s.get(key, 0) - c
    s = {k: v for k, v in s.items() if v}
    second = 0  # multilinear: every d_kk vanishes identically
    return {"d_kk": second, "l-1": len(d), "l0": len(e), "l1": len(s)}


def _monomial_index(m: int, deg: int):
    monos = [frozenset(c) for c in combinations(range(m), deg)]
    return monos, {mono: i for i, mono in enumerate(monos)}


def _rank_mod_p(M: np.ndarray, p: int = 2147483629) -> int:
    A = np.array(M, dtype=np.int64) % p
    rows, cols = A.shape
    r = 0
    for c in range(cols):
        if r == rows:
            break
        piv = np.nonzero(A[r:, c])[0]
        if piv.size == 0:
            continue
        pr = r + piv[0]
        if pr != r:
            A[[r, pr]] = A[[pr, r]]
        inv = pow(int(A[r, c]), p - 2, p)
        A[r] = (A[r] * inv) % p
        nz = np.nonzero(A[:, c])[0]
        nz = nz[nz != r]
        if nz.size:
            # (a * b) < 2^62 for a, b < p < 2^31
            A[nz] = (A[nz] - (A[nz, c][:, None] * A[r][None, :]) % p) % p
        r += 1
    return r


def rational_rank(rows) -> int:
    """Exact rank over Q.

    Integer rows are eliminated fraction-free (each pair combination is an
    integer combination, then divided by the row gcd), which is exact and
    keeps entries small.  Rational input is first scaled to integers.
    """
    rows = [[Fraction(v) for v in row] for row in rows]
    if not rows or not rows[0]:
        return 0
    ints = []
    for row in rows:
        den = math.lcm(*(v.denominator for v in row))
        ints.append([int(v * den) for v in row])
    A = np.array(ints, dtype=object)
    nr, nc = A.shape
    r = 0
    for c in range(nc):
        if r == nr:
            break
        piv = next((i for i in range(r, nr) if A[i, c] != 0), None)
        if piv is None:
            continue
        if piv != r:
            A[[r, piv]] = A[[piv, r]]
        below = [i for i in range(r + 1, nr) if A[i, c] != 0]
        if below:
            p = A[r, c]
            A[below] = A[below] * p - np.outer(A[below, c], A[r])
            for i in below:
                g = math.gcd(*A[i])
                if g > 1:
                    A[i] = A[i] // g
        r += 1
    return r


def orbit_rank(n: int) -> int:
    """Exact rational rank of the span of all matching products (small n)."""
    polys = [matching_polynomial(mt) for mt in all_matchings(2 * n)]
    return rational_rank(polys_to_matrix(polys, 2 * n, n).tolist())


def polys_to_matrix(polys, m: int, deg: int) -> np.ndarray:
    monos, idx = _monomial_index(m, deg)
    M = np.zeros((len(polys), len(monos)), dtype=np.int64)
    for i, p in enumerate(polys):
        for mono, c in p.items():
            M[i, idx[mono]] = c
    return M


def translation_matrix(n: int) -> np.ndarray:
    """Matrix of ``sum_k d_k`` from multilinear degree-n to degree-(n-1) polynomials in ``2n`` variables."""
    m = 2 * n
    monos, _ = _monomial_index(m, n)
    lows, lidx = _monomial_index(m, n - 1)
    D = np.zeros((len(monos), len(lows)), dtype=np.int64)
    for i, mono in enumerate(monos):
        for k in mono:
            D[i, lidx[mono - {k}]] = 1
    return D


@dataclass
class DimensionCertificate:
    n: int
    catalan: int
    rank_lower: int          # exact rank of the basis matrix over Q
    dim_upper: int           # C(2n, n) - rank of translation map mod p (>= kernel dimension over Q)
    all_annihilated: bool
    certified: bool


def certify_kappa_inf_dimension(n: int) -> DimensionCertificate:
    """Exact dimension of the multilinear, degree-n, translation-invariant solution space.

    The non-crossing matching products lie in the kernel of ``sum d_k``, so
    ``rank_Q(basis) <= dim_Q ker <= C(2n,n) - rank_p(D)``.
    Equal outer bounds pin every quantity, including the span of the full
    symmetric-group orbit, at ``catalan(n)``.
    """
    basis = kappa_inf_basis(n)
    m = 2 * n
    ok = all(all(v == 0 for v in kappa_inf_residuals(p, m).values()) for p in basis)
    lower = rational_rank(polys_to_matrix(basis, m, n).tolist())
    upper = math.comb(m, n) - (_rank_mod_p(translation_matrix(n)) if n >= 1 else 0)
    cat = catalan(n)
    return DimensionCertificate(n, cat, lower, upper, ok, bool(ok and lower == upper == cat))
