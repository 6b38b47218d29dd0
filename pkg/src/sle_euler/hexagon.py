"""Crossing probabilities at kappa = 6 for threefold-symmetric hexagons.

The domain is the unit disc with marked points ``1, u, j, ju, j^2, j^2 u``
(``j = e^{2i pi/3}``, ``u = e^{i theta}``, ``0 < theta < 2 pi / 3``).  Blue sides
are the arcs ``(1, u)``, ``(j, ju)``, ``(j^2, j^2 u)``.  The five connection
events are: all blue sides in one cluster, all yellow sides in one cluster,
and three events where exactly two blue sides are joined.
"""

from __future__ import annotations

import cmath
import json
import math
from dataclasses import dataclass
from functools import lru_cache

from scipy import integrate

from .specialfn import gamma, hyp2f1, hyp3f2_at_one

J = cmath.exp(2j * math.pi / 3)
_SPLIT = 0.5


@dataclass(frozen=True)
class SymmetricHexConfig:
    theta: float

    def __post_init__(self):
        if not 0 < self.theta < 2 * math.pi / 3:
            raise ValueError(f"theta must lie in (0, 2pi/3), got {self.theta}")

    @classmethod
    def from_point(cls, u: complex, tol: float = 1e-12) -> "SymmetricHexConfig":
        u = complex(u)
        if abs(abs(u) - 1.0) > tol:
            raise ValueError("u must lie on the unit circle")
        return cls(cmath.phase(u))

    @property
    def u(self) -> complex:
        return cmath.exp(1j * self.theta)

    @property
    def w(self) -> float:
        return w_of_theta(self.theta)

    @property
    def first_half(self) -> bool:
        return self.theta <= math.pi / 3

    def marked_points(self) -> list[complex]:
        u = self.u
        return [1.0 + 0j, u, J, J * u, J * J, J * J * u]


def w_of_theta(theta: float) -> float:
    """``sin^2(3 theta / 2)``: 0 at both ends of the arc, 1 at the regular hexagon ``theta = pi/3``."""
    return math.sin(1.5 * theta) ** 2


def _check_w(w, closed_right=False):
    w = float(w)
    ok = 0 < w <= 1 if closed_right else 0 < w < 1
    if not ok:
        raise ValueError(f"w out of range: {w}")
    return w


def _connection(k):
    # w^{1/2} h_k = A F(5/6,5/6;7/6;w) + B w^{-1/6} F(2/3,2/3;5/6;w)
    if k == 1:
        a = gamma(1.5) * gamma(-1 / 6) / gamma(2 / 3) ** 2
        b = gamma(1.5) * gamma(1 / 6) / gamma(5 / 6) ** 2
    else:
        a = gamma(0.5) * gamma(-1 / 6) / gamma(1 / 6) ** 2
        b = gamma(0.5) * gamma(1 / 6) / gamma(1 / 3) ** 2
    return float(a), float(b)


_CONN = {1: _connection(1), 2: _connection(2)}


def _near_zero_parts(k, w):
    a, b = _CONN[k]
    return a * float(hyp2f1(5 / 6, 5 / 6, 7 / 6, w)), b * float(hyp2f1(2 / 3, 2 / 3, 5 / 6, w))


def _h1(w):
    if w < _SPLIT:
        p, q = _near_zero_parts(1, w)
        return w ** -0.5 * (p + q * w ** (-1 / 6))
    return w ** -0.5 * float(hyp2f1(5 / 6, 5 / 6, 1.5, 1.0 - w))


def _h2(w):
    if w < _SPLIT:
        p, q = _near_zero_parts(2, w)
        return w ** -0.5 * (p + q * w ** (-1 / 6))
    return (w * (1.0 - w)) ** -0.5 * float(hyp2f1(1 / 3, 1 / 3, 0.5, 1.0 - w))


def h_functions(w: float) -> tuple[float, float]:
    """``h1 = w^{-1/2} 2F1(5/6,5/6;3/2;1-w)``, ``h2 = (w(1-w))^{-1/2} 2F1(1/3,1/3;1/2;1-w)``.

    Below ``w = 1/2`` both are evaluated through the connection formulas at argument ``w``.
    """
    w = _check_w(w)
    return float(_h1(w)), float(_h2(w))


def continuation_expansion(w: float) -> float:
    """Leading two terms of ``w^{1/2} h1`` as ``w -> 0``: constant plus ``w^{-1/6}``."""
    a, b = _CONN[1]
    return a + b * w ** (-1 / 6)


def _tail_integral(h, lo, hi):
    # integral over [lo, hi] within [0, 1/2], variable w = t^6 makes the integrand smooth
    k = 1 if h is _h1 else 2

    def f(t):
        p, q = _near_zero_parts(k, t ** 6)
        return 6.0 * (p * t * t + q * t)
    val, _ = integrate.quad(f, lo ** (1 / 6), hi ** (1 / 6), epsabs=0, epsrel=1e-13, limit=200)
    return val


def _head_integrand(h, s):
    # h(1 - s^2) * 2s with 1 - w = s^2 taken exactly, so nothing cancels near w = 1
    w = 1.0 - s * s
    if h is _h1:
        if w < _SPLIT:
            return _h1(w) * 2 * s
        return 2 * s * w ** -0.5 * float(hyp2f1(5 / 6, 5 / 6, 1.5, s * s))
    if w < _SPLIT:
        return _h2(w) * 2 * s
    return 2 * w ** -0.5 * float(hyp2f1(1 / 3, 1 / 3, 0.5, s * s))


def _head_integral(h, lo, hi):
    # integral over [lo, hi] within [1/2, 1], variable w = 1 - s^2
    val, _ = integrate.quad(lambda s: _head_integrand(h, s), math.sqrt(1.0 - hi), math.sqrt(1.0 - lo),
                            epsabs=0, epsrel=1e-13, limit=200)
    return val


def _g(h, w):
    if w >= _SPLIT:
        return _head_integral(h, w, 1.0)
    return _tail_integral(h, w, _SPLIT) + _head_integral(h, _SPLIT, 1.0)


def g_functions(w: float) -> tuple[float, float]:
    """``g_i(w) = int_w^1 h_i(s) ds``; ``w = 0`` gives the full integral."""
    w = float(w)
    if not 0 <= w <= 1:
        raise ValueError(f"w out of range: {w}")
    if w == 1:
        return 0.0, 0.0
    if w == 0:
        return _g0()
    return float(_g(_h1, w)), float(_g(_h2, w))


@lru_cache(maxsize=1)
def _g0():
    return float(_g(_h1, 0.0)), float(_g(_h2, 0.0))


def g_at_zero_closed() -> tuple[float, float]:
    """``g1(0) = 2 3F2(1,5/6,5/6;3/2,3/2;1)`` and ``g2(0) = Gamma(1/3) Gamma(1/2)^2 / Gamma(2/3)^2``."""
    g1 = 2.0 * float(hyp3f2_at_one(1.0, 5 / 6, 5 / 6, 1.5, 1.5))
    g2 = float(gamma(1 / 3) * gamma(0.5) ** 2 / gamma(2 / 3) ** 2)
    return g1, g2


@lru_cache(maxsize=1)
def hex_constants() -> tuple[float, float, float]:
    """``(c1, c2, c3)`` with ``c3 = 1 - c1 g1(0)``."""
    g23 = float(gamma(2 / 3))
    c2 = math.sqrt(3) * g23 ** 3 / (2 * math.pi ** 2)
    c1 = (math.sqrt(3) / (2 ** (2 / 3) * math.pi)) ** 5 * g23 ** 9
    g1_0, _ = g_at_zero_closed()
    return c1, c2, 1.0 - c1 * g1_0


def g_plus_minus(w: float) -> tuple[float, float]:
    c1, c2, c3 = hex_constants()
    g1, g2 = g_functions(w)
    return c1 * g1 + c3, c2 * g2


def _as_config(u) -> SymmetricHexConfig:
    if isinstance(u, SymmetricHexConfig):
        return u
    if isinstance(u, complex):
        return SymmetricHexConfig.from_point(u)
    return SymmetricHexConfig(float(u))


def mercedes_probability(u) -> float:
    """Probability that the three blue sides are joined by one blue cluster.

    ``u`` is a point on the unit circle, a :class:`SymmetricHexConfig`, or an
    angle in radians.  On the first half of the arc the value is
    ``(g+ - g-)/2``; the reflection ``u -> j/u`` exchanges colours and flips
    the sign of ``g-``.
    """
    cfg = _as_config(u)
    gp, gm = g_plus_minus(cfg.w)
    val = 0.5 * (gp - gm) if cfg.first_half else 0.5 * (gp + gm)
    return min(1.0, max(0.0, val))


def event_probabilities(u) -> dict:
    """All five connection events.

    Swapping colours maps the blue Mercedes event to the yellow one; the
    three two-side events form one rotation orbit and share the remainder.
    """
    cfg = _as_config(u)
    gp, gm = g_plus_minus(cfg.w)
    sign = -1.0 if cfg.first_half else 1.0
    blue = 0.5 * (gp + sign * gm)
    yellow = 0.5 * (gp - sign * gm)
    side = (1.0 - gp) / 3.0
    return {
        "blue_all": blue,
        "yellow_all": yellow,
        "blue_12": side,
        "blue_23": side,
        "blue_31": side,
    }


def regular_hexagon_two_side_probability() -> float:
    """``(1 - c3)/3`` at the regular hexagon."""
    _, _, c3 = hex_constants()
    return (1.0 - c3) / 3.0


def regular_hexagon_two_side_closed() -> float:
    """The same value written as ``(2/3)(sqrt3/(2^{2/3} pi))^5 Gamma(2/3)^9 3F2(1,5/6,5/6;3/2,3/2;1)``."""
    k = (math.sqrt(3) / (2 ** (2 / 3) * math.pi)) ** 5 * float(gamma(2 / 3)) ** 9
    return (2 / 3) * k * float(hyp3f2_at_one(1.0, 5 / 6, 5 / 6, 1.5, 1.5))


def hexagon_json(theta_deg: float) -> str:
    cfg = SymmetricHexConfig(math.radians(theta_deg))
    out = {"theta": theta_deg, "w": cfg.w, **event_probabilities(cfg)}
    return json.dumps(out)
