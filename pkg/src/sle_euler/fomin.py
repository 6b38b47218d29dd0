"""kappa = 2: determinants ``det((x_i - y_j)^{-2})`` and the normalized Fomin density."""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction

import numpy as np


def _pair_arrays(x, y):
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("x and y must be 1-d with equal length")
    if np.any(x[:, None] == y[None, :]):
        raise ValueError("coincident points")
    return x, y


def fomin_matrix(x, y) -> np.ndarray:
    x, y = _pair_arrays(x, y)
    return (x[:, None] - y[None, :]) ** -2.0


def fomin_determinant(x, y) -> float:
    """``det((x_i - y_j)^{-2})``."""
    return float(np.linalg.det(fomin_matrix(x, y)))


def _fraction_det(M) -> Fraction:
    # Gaussian elimination over the rationals
    A = [list(r) for r in M]
    n = len(A)
    det = Fraction(1)
    for c in range(n):
        p = next((r for r in range(c, n) if A[r][c] != 0), None)
        if p is None:
            return Fraction(0)
        if p != c:
            A[c], A[p] = A[p], A[c]
            det = -det
        det *= A[c][c]
        for r in range(c + 1, n):
            f = A[r][c] / A[c][c]
            if f:
                A[r] = [a - f * b for a, b in zip(A[r], A[c])]
    return det


def fomin_determinant_exact(x, y) -> Fraction:
    """Exact determinant for rational input (ints, Fractions or decimal strings)."""
    x = [Fraction(v) for v in x]
    y = [Fraction(v) for v in y]
    if len(x) != len(y):
        raise ValueError("x and y must have equal length")
    if any(a == b for a in x for b in y):
        raise ValueError("coincident points")
    return _fraction_det([[1 / (a - b) ** 2 for b in y] for a in x])


def check_nested(x, y) -> None:
    """Require ``x_1 < ... < x_n < y_n < ... < y_1``."""
    seq = np.concatenate([np.asarray(x, float), np.asarray(y, float)[::-1]])
    if np.any(np.diff(seq) <= 0):
        raise ValueError("points must satisfy x_1 < ... < x_n < y_n < ... < y_1")


def fomin_density(x, y) -> float:
    """``det((x_i - y_j)^{-2}) prod_i (x_i - y_i)^2``; a probability for nested points."""
    x, y = _pair_arrays(x, y)
    check_nested(x, y)
    M = fomin_matrix(x, y)
    # divide each row by its diagonal entry before taking the determinant
    return float(np.linalg.det(M / np.diag(M)[:, None]))


def fomin_density_exact(x, y) -> Fraction:
    check_nested([float(Fraction(v)) for v in x], [float(Fraction(v)) for v in y])
    d = fomin_determinant_exact(x, y)
    for a, b in zip(x, y):
        d *= (Fraction(a) - Fraction(b)) ** 2
    return d


@dataclass
class FominCollapseReport:
    pair: int
    limit: float
    target: float
    rel_error: float
    tolerance: float
    passed: bool

    def to_json(self) -> str:
        return json.dumps({"pair": self.pair, "limit": self.limit, "target": self.target,
                           "rel_error": self.rel_error, "tolerance": self.tolerance, "pass": self.passed})


def fomin_collapse_check(x, y, i: int, tol: float = 1e-8,
                         eps=(1e-3, 5e-4, 2.5e-4)) -> FominCollapseReport:
    """Collapse pair ``i`` (0-based) and compare with the density of the other pairs.

    Only pairs whose two ends are boundary neighbours can collapse: the
    innermost pair shrinks onto its midpoint, and the outermost pair (whose
    ends are neighbours through infinity) is pushed out to ``-inf, +inf``.
    The density is Moebius invariant, so both are the same limit.  The value
    at zero width is obtained by quadratic extrapolation.
    """
    x, y = _pair_arrays(x, y)
    check_nested(x, y)
    n = x.size
    if not 0 <= i < n:
        raise IndexError(i)
    if n == 1:
        return FominCollapseReport(i, 1.0, 1.0, 0.0, tol, True)
    if 0 < i < n - 1:
        raise ValueError("only the innermost or the outermost pair can collapse")
    keep = [k for k in range(n) if k != i]
    target = fomin_density(x[keep], y[keep])
    span = float(y[0] - x[0])
    widths, vals = [], []
    for e in eps:
        xx, yy = x.copy(), y.copy()
        if i == n - 1:
            mid, d = 0.5 * (x[i] + y[i]), 0.5 * e * (y[i] - x[i])
            xx[i], yy[i] = mid - d, mid + d
            widths.append(d)
        else:
            c, R = 0.5 * (x[0] + y[0]), span / e
            xx[0], yy[0] = c - R, c + R
            widths.append(1.0 / R)
        vals.append(fomin_density(xx, yy))
    limit = _extrapolate(widths, vals)
    rel = abs(limit - target) / max(abs(target), 1e-300)
    return FominCollapseReport(i, float(limit), float(target), float(rel), tol, bool(rel <= tol))


def _extrapolate(h, v):
    # polynomial extrapolation to h = 0 through the last three points
    h = np.asarray(h[-3:])
    v = np.asarray(v[-3:])
    c = np.polyfit(h, v, len(h) - 1)
    return float(c[-1])


def fomin_json(x, y) -> str:
    x, y = _pair_arrays(x, y)
    out = {"determinant": fomin_determinant(x, y)}
    try:
        out["density"] = fomin_density(x, y)
    except ValueError:
        out["density"] = None
    return json.dumps(out)
