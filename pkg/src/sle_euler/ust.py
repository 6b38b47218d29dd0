"""kappa = 8: periods of the hyperelliptic differentials ``(u - x_1)^{i-1} du / sqrt(prod_j (u - x_j))``
over Pochhammer loops around ``(x_{2j-1}, x_{2j})``, the determinant solution and
the two identities behind its martingale property.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .contour import MultiPowerIntegrand, integrate_branch_tracked, path_rule, pochhammer_loop

KAPPA = 8.0


def _check_points(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size < 4 or x.size % 2:
        raise ValueError(f"need an even number >= 4 of points, got {x.size}")
    if np.any(np.diff(x) <= 0):
        raise ValueError("points must be strictly increasing")
    return x


def _clearances(x):
    g = np.diff(x)
    left = np.concatenate([[np.inf], g])
    right = np.concatenate([g, [np.inf]])
    loc = np.minimum(left, right)
    n = x.size // 2
    return [0.25 * min(loc[2 * j], loc[2 * j + 1]) for j in range(n - 1)]


def _loops(x, clear):
    n = x.size // 2
    return [pochhammer_loop(x[2 * j], x[2 * j + 1], clear[j]) for j in range(n - 1)]


class PeriodEvaluator:
    """Period matrix with loop clearances and panel schedules frozen at ``x_ref``.

    ``basis="shifted"`` uses ``(u - x_1)^{i-1}``, ``basis="monomial"`` uses ``u^{i-1}``.
    Rows index forms, columns index loops.
    """

    def __init__(self, x_ref, tol: float = 1e-12):
        x = _check_points(x_ref)
        self.n = x.size // 2
        self.clear = _clearances(x)
        self.schedules = []
        m = self.n - 1
        for loop in _loops(x, self.clear):
            # schedule from the highest-degree form, then refined once
            f = MultiPowerIntegrand(x, np.full(x.size, -0.5), multiplier=lambda u, m=m, x1=x[0]: (u - x1) ** (m - 1) + 1.0)
            _, info = integrate_branch_tracked(f, loop, tol, full_output=True)
            sched = []
            for k, t0, t1 in info.schedule:
                tm = 0.5 * (t0 + t1)
                sched += [(k, t0, tm), (k, tm, t1)]
            self.schedules.append(tuple(sched))

    def __call__(self, x, basis: str = "shifted") -> np.ndarray:
        x = _check_points(x)
        if x.size != 2 * self.n:
            raise ValueError("point count differs from the reference configuration")
        m = self.n - 1
        P = np.empty((m, m), dtype=complex)
        for j, (loop, sched) in enumerate(zip(_loops(x, self.clear), self.schedules)):
            u, w, logs = path_rule(loop, x, sched)
            base = np.exp(-0.5 * np.sum(logs, axis=1)) * w
            z = u - x[0] if basis == "shifted" else u
            if basis not in ("shifted", "monomial"):
                raise ValueError(f"unknown basis {basis!r}")
            for i in range(m):
                P[i, j] = np.sum(base * z ** i)
        return P


def period_matrix(x, tol: float = 1e-12, basis: str = "shifted") -> np.ndarray:
    """``P[i, j] = int_{C_j} omega_i``; ``C_j`` the Pochhammer loop around ``(x_{2j-1}, x_{2j})``."""
    P = PeriodEvaluator(x, tol)(x, basis)
    if abs(np.linalg.det(P)) == 0:
        raise ArithmeticError("singular period matrix")
    return P


def vandermonde_quarter(x) -> float:
    x = np.asarray(x, dtype=float)
    iu = np.triu_indices(x.size, 1)
    return math.exp(0.25 * float(np.sum(np.log(x[iu[1]] - x[iu[0]]))))


def psi_ust(x, tol: float = 1e-12, basis: str = "shifted") -> float:
    """``|prod_{i<j} (x_j - x_i)^{1/4} det P|``."""
    x = _check_points(x)
    return vandermonde_quarter(x) * abs(np.linalg.det(period_matrix(x, tol, basis)))


class PsiUST:
    """``psi_ust`` with a frozen schedule, for finite differences near ``x_ref``."""

    def __init__(self, x_ref, tol: float = 1e-12):
        self.ev = PeriodEvaluator(x_ref, tol)

    def __call__(self, x) -> float:
        x = np.asarray(x, dtype=float)
        return vandermonde_quarter(x) * abs(np.linalg.det(self.ev(x)))


# ---------------------------------------------------------------------------
# identities in the first point


def _dP(ev, x, h):
    x = np.asarray(x, dtype=float)
    e = np.zeros(x.size)
    e[0] = h
    return (ev(x + e) - ev(x - e)) / (2 * h)


@dataclass
class IdentityReport:
    name: str
    residual: float
    tolerance: float
    passed: bool
    detail: dict

    def to_json(self) -> str:
        return json.dumps({"name": self.name, "residual": self.residual, "tolerance": self.tolerance,
                           "pass": self.passed, **self.detail})


def verify_omega_recursion(x, h: float | None = None, tol: float = 1e-5) -> IdentityReport:
    """``d/dx_1`` of row ``i+1`` of the period matrix equals ``(1/2 - i)`` times row ``i``."""
    x = _check_points(x)
    n = x.size // 2
    h = 1e-4 * float(np.min(np.diff(x))) if h is None else h
    if n < 3:
        return IdentityReport("omega_recursion", 0.0, tol, True, {"rows": 0})
    ev = PeriodEvaluator(x)
    P = ev(x)
    dP = _dP(ev, x, h)
    worst = 0.0
    for i in range(1, n - 1):
        lhs = dP[i]
        rhs = (0.5 - i) * P[i - 1]
        worst = max(worst, float(np.max(np.abs(lhs - rhs)) / np.max(np.abs(rhs))))
    return IdentityReport("omega_recursion", worst, tol, worst <= tol, {"rows": n - 2, "h": h})


def derivative_matrix(x, h: float | None = None) -> np.ndarray:
    """``(d/dx_1 P) P^{-1}``."""
    x = _check_points(x)
    h = 1e-4 * float(np.min(np.diff(x))) if h is None else h
    ev = PeriodEvaluator(x)
    return _dP(ev, x, h) @ np.linalg.inv(ev(x))


def verify_drift_identity(x, h: float | None = None, tol: float = 1e-5) -> IdentityReport:
    """``8 Tr(P^{-1} dP) e_1 + 8 P d(P^{-1}) e_1 = 4 e_2`` with ``d = d/dx_1``."""
    x = _check_points(x)
    n = x.size // 2
    if n <= 2:
        raise ValueError("the drift identity needs n > 2")
    h = 1e-4 * float(np.min(np.diff(x))) if h is None else h
    ev = PeriodEvaluator(x)
    P = ev(x)
    dP = _dP(ev, x, h)
    Pinv = np.linalg.inv(P)
    dPinv = -Pinv @ dP @ Pinv
    m = n - 1
    e1 = np.zeros(m)
    e1[0] = 1.0
    lhs = 8 * np.trace(Pinv @ dP) * e1 + 8 * (P @ dPinv) @ e1
    rhs = np.zeros(m)
    rhs[1] = 4.0
    res = float(np.max(np.abs(lhs - rhs)))
    return IdentityReport("drift_identity", res, tol, res <= tol, {"h": h, "lhs_re": lhs.real.tolist()})


def companion_residual(x, h: float | None = None) -> float:
    """Largest deviation of rows 2.. of ``dP P^{-1}`` from the subdiagonal ``1/2 - i``."""
    M = derivative_matrix(x, h)
    m = M.shape[0]
    target = np.zeros((m, m))
    for i in range(1, m):
        target[i, i - 1] = 0.5 - i
    return float(np.max(np.abs(M[1:] - target[1:]))) if m > 1 else 0.0
