"""Complex Gamma/Beta, Gauss 2F1, 3F2 at unit argument, Lauricella F_D and the
four-point crossing function.

Scalar routines on Python complex numbers.  Everything here is deterministic:
fixed Lanczos coefficients, fixed series cut-offs, no adaptive state.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

# Lanczos approximation, g = 607/128, n = 15 (Godfrey's published coefficient set).
_LANCZOS_G = 607.0 / 128.0
_LANCZOS_COEF = (
    0.99999999999999709182,
    57.156235665862923517,
    -59.597960355475491248,
    14.136097974741747174,
    -0.49191381609762019978,
    0.33994649984811888699e-4,
    0.46523628927048575665e-4,
    -0.98374475304879564677e-4,
    0.15808870322491248884e-3,
    -0.21026444172410488319e-3,
    0.21743961811521264320e-3,
    -0.16431810653676389022e-3,
    0.84418223983852743293e-4,
    -0.26190838401581408670e-4,
    0.36899182659531622704e-5,
)
_SQRT_2PI = math.sqrt(2.0 * math.pi)
_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


class PoleError(ValueError):
    """Argument sits on a pole of the function."""


class ConvergenceError(ArithmeticError):
    """Series or quadrature did not reach the requested accuracy."""


def _is_nonpositive_integer(z: complex, tol: float = 1e-13) -> bool:
    z = complex(z)
    r = round(z.real)
    return abs(z.imag) <= tol and r <= 0 and abs(z.real - r) <= tol * max(1.0, abs(z.real))


def _real_if(z: complex, like) -> complex | float:
    if not isinstance(like, complex) and not np.iscomplexobj(like):
        return z.real
    return z


def _lanczos_sum(z: complex) -> complex:
    # z already shifted by -1
    x = _LANCZOS_COEF[0]
    for i in range(1, len(_LANCZOS_COEF)):
        x += _LANCZOS_COEF[i] / (z + i)
    return x


def sinpi(z):
    """``sin(pi z)`` with the real part reduced modulo 2 before scaling by pi."""
    w = complex(z)
    a = math.fmod(w.real, 2.0)
    b = w.imag
    if b == 0:
        return complex(math.sin(math.pi * a), 0.0)
    return complex(math.sin(math.pi * a) * math.cosh(math.pi * b), math.cos(math.pi * a) * math.sinh(math.pi * b))


def gamma(z):
    """Gamma function for real or complex ``z``; reflection for ``Re z < 0.5``."""
    w = complex(z)
    if _is_nonpositive_integer(w):
        raise PoleError(f"gamma has a pole at {z}")
    if w.real < 0.5:
        val = math.pi / (sinpi(w) * gamma(1.0 - w))
    else:
        w = w - 1.0
        # the exponent reaches |z| log|z| in size, so it is formed in extended precision
        wl = np.clongdouble(w)
        tl = wl + np.longdouble(_LANCZOS_G) + np.longdouble(0.5)
        val = _SQRT_2PI * complex(np.exp((wl + np.longdouble(0.5)) * np.log(tl) - tl)) * _lanczos_sum(w)
    return _real_if(complex(val), z)


def loggamma(z) -> complex:
    """A logarithm of Gamma: ``exp(loggamma(z)) == gamma(z)``; the imaginary part may differ
    from the principal branch by a multiple of ``2 pi``."""
    w = complex(z)
    if _is_nonpositive_integer(w):
        raise PoleError(f"loggamma has a pole at {z}")
    if w.real < 0.5:
        return cmath.log(math.pi / sinpi(w)) - loggamma(1.0 - w)
    w = w - 1.0
    t = w + _LANCZOS_G + 0.5
    return _LOG_SQRT_2PI + (w + 0.5) * cmath.log(t) - t + cmath.log(_lanczos_sum(w))


def rgamma(z):
    """1/Gamma(z), zero at the poles."""
    if _is_nonpositive_integer(complex(z)):
        return 0.0
    return 1.0 / gamma(z)


def beta(a, b):
    return gamma(a) * gamma(b) / gamma(a + b) if not _is_nonpositive_integer(complex(a + b)) else 0.0


def digamma(z):
    """psi(z) by upward recurrence to |z| >= 10 then the asymptotic series."""
    w = complex(z)
    if _is_nonpositive_integer(w):
        raise PoleError(f"digamma has a pole at {z}")
    acc = 0j
    if w.real < 0.5:
        # psi(1-z) - psi(z) = pi cot(pi z)
        acc -= math.pi / cmath.tan(math.pi * w)
        w = 1.0 - w
    while abs(w) < 10.0:
        acc -= 1.0 / w
        w += 1.0
    w2 = 1.0 / (w * w)
    series = w2 * (1.0 / 12 - w2 * (1.0 / 120 - w2 * (1.0 / 252 - w2 * (1.0 / 240 - w2 * (1.0 / 132 - w2 * 691.0 / 32760)))))
    val = acc + cmath.log(w) - 0.5 / w - series
    return _real_if(val, z)


def pochhammer(a, k: int):
    out = 1.0 + 0j
    for i in range(k):
        out *= a + i
    return out


# ---------------------------------------------------------------------------
# Gauss hypergeometric function


@dataclass(frozen=True)
class HypergeometricParams:
    a: complex
    b: complex
    c: complex


def _hyp2f1_series(a, b, c, z, maxterms: int = 200000) -> complex:
    s = 1.0 + 0j
    term = 1.0 + 0j
    for k in range(maxterms):
        term *= (a + k) * (b + k) / ((c + k) * (k + 1.0)) * z
        s += term
        if term == 0:
            return s
        if abs(term) <= 1e-17 * abs(s) and k > 2:
            return s
    raise ConvergenceError(f"2F1 series did not converge at z={z}")


def _polynomial_degree(a, b):
    for p in (a, b):
        if _is_nonpositive_integer(complex(p)):
            return int(round(-complex(p).real))
    return None


def hyp2f1(p, z, *args):
    """Gauss 2F1(a, b; c; z).

    Call as ``hyp2f1(HypergeometricParams(a, b, c), z)`` or ``hyp2f1(a, b, c, z)``.
    Power series for ``|z| <= 0.75``; Pfaff transformation for real ``z < 0``;
    the ``1 - z`` connection formulas otherwise, including the logarithmic case
    when ``c - a - b`` is an integer.
    """
    if args:
        a, b, c, z = p, z, args[0], args[1]
    else:
        a, b, c = p.a, p.b, p.c
    like = z
    a, b, c, z = complex(a), complex(b), complex(c), complex(z)
    if _is_nonpositive_integer(c):
        raise PoleError(f"2F1 undefined for c={c}")
    if z == 0:
        return _real_if(1.0 + 0j, like)
    deg = _polynomial_degree(a, b)
    if deg is not None:
        # terminating series: exact for every z
        s, term = 1.0 + 0j, 1.0 + 0j
        for k in range(deg):
            term *= (a + k) * (b + k) / ((c + k) * (k + 1.0)) * z
            s += term
        return _real_if(s, like)
    if abs(z) <= 0.75:
        return _real_if(_hyp2f1_series(a, b, c, z), like)
    if abs(z.imag) < 1e-15 and z.real < 0:
        # Pfaff: (1-z)^(-a) F(a, c-b; c; z/(z-1)), argument lands in (0, 1)
        zz = z.real
        val = (1.0 - zz) ** (-a) * hyp2f1(a, c - b, c, zz / (zz - 1.0) + 0j)
        return _real_if(complex(val), like)
    if abs(1.0 - z) < 1.0 and abs(z) < 1.0 + 1e-15 and abs(z.imag) < 1e-15:
        return _real_if(_hyp2f1_near_one(a, b, c, z.real), like)
    if abs(z) < 1.0:
        return _real_if(_hyp2f1_series(a, b, c, z), like)
    if z == 1:
        s = c - a - b
        if s.real <= 0:
            raise ConvergenceError(f"2F1 diverges at z=1 for Re(c-a-b)={s.real}")
        return _real_if(gamma(c) * gamma(s) / (gamma(c - a) * gamma(c - b)), like)
    raise ValueError(f"hyp2f1: argument {z} outside the supported region")


def _hyp2f1_near_one(a, b, c, x: float) -> complex:
    """2F1 for real x in (0.75, 1] via the 1-x connection formulas."""
    s = c - a - b
    m = round(s.real)
    if abs(s.imag) > 1e-13 or abs(s.real - m) > 1e-10:
        y = 1.0 - x
        if y == 0:
            if s.real <= 0:
                raise ConvergenceError(f"2F1 diverges at z=1 for Re(c-a-b)={s.real}")
            return gamma(c) * gamma(s) / (gamma(c - a) * gamma(c - b))
        t1 = gamma(c) * gamma(s) * rgamma(c - a) * rgamma(c - b) * _hyp2f1_series(a, b, 1.0 - s, y)
        t2 = (
            gamma(c) * gamma(-s) * rgamma(a) * rgamma(b) * cmath.exp(s * math.log(y))
            * _hyp2f1_series(c - a, c - b, 1.0 + s, y)
        )
        return t1 + t2
    if m < 0:
        # Euler: F = (1-x)^(c-a-b) F(c-a, c-b; c; x), now with c-a-b = -m > 0
        y = 1.0 - x
        if y == 0:
            raise ConvergenceError(f"2F1 diverges at z=1 for c-a-b={m}")
        return cmath.exp(s * math.log(y)) * _hyp2f1_log_case(c - a, c - b, -m, x)
    return _hyp2f1_log_case(a, b, m, x)


def _hyp2f1_log_case(a, b, m: int, x: float) -> complex:
    """F(a, b; a+b+m; x), m a non-negative integer, near x = 1 (logarithmic connection)."""
    c = a + b + m
    y = 1.0 - x
    if y == 0:
        if m == 0:
            raise ConvergenceError("2F1 diverges at z=1 when c = a + b")
        return gamma(c) * gamma(m) / (gamma(c - a) * gamma(c - b))
    logy = math.log(y)
    head = 0j
    if m > 0:
        pref = gamma(m) * gamma(c) * rgamma(a + m) * rgamma(b + m)
        term = 1.0 + 0j
        for k in range(m):
            if k > 0:
                term *= (a + k - 1) * (b + k - 1) / (k * (1 - m + k - 1)) * y
            head += term
        head *= pref
    pref2 = gamma(c) * rgamma(a) * rgamma(b) * ((-1.0) ** m) * (y ** m)
    if pref2 == 0:
        return head
    tail = 0j
    coef = 1.0 / math.factorial(m) + 0j
    psi1, psim = digamma(1.0), digamma(m + 1.0)
    psia, psib = digamma(a + m), digamma(b + m)
    for k in range(100000):
        term = coef * (logy - psi1 - psim + psia + psib)
        tail += term
        if abs(term) <= 1e-17 * max(abs(tail), 1e-300) and k > 3:
            break
        coef *= (a + m + k) * (b + m + k) / ((k + 1.0) * (k + m + 1.0)) * y
        psi1 += 1.0 / (k + 1.0)
        psim += 1.0 / (k + m + 1.0)
        psia += 1.0 / (a + m + k)
        psib += 1.0 / (b + m + k)
    else:
        raise ConvergenceError("logarithmic 2F1 series did not converge")
    return head - pref2 * tail


# ---------------------------------------------------------------------------
# 3F2 at unit argument


def _bernoulli_numbers(count: int) -> list[float]:
    from fractions import Fraction

    B = [Fraction(0)] * (count + 1)
    B[0] = Fraction(1)
    for mm in range(1, count + 1):
        B[mm] = -sum(Fraction(math.comb(mm + 1, k)) * B[k] for k in range(mm)) / (mm + 1)
    return [float(v) for v in B]


_BERN = _bernoulli_numbers(40)


def _bernoulli_poly(n: int, x: complex) -> complex:
    return sum(math.comb(n, k) * _BERN[k] * x ** (n - k) for k in range(n + 1))


def _power_tail(p: complex, N: int, terms: int = 8) -> complex:
    """sum_{k >= N} k^(-p) by Euler-Maclaurin (Re p > 1)."""
    Nf = float(N)
    val = Nf ** (1.0 - p) / (p - 1.0) + 0.5 * Nf ** (-p)
    rising = p  # (p)_{2j-1}
    for j in range(1, terms + 1):
        val += _BERN[2 * j] / math.factorial(2 * j) * rising * Nf ** (-p - 2 * j + 1)
        rising *= (p + 2 * j - 1) * (p + 2 * j)
    return val


def hyp3f2_at_one(a1, a2, a3, b1, b2, *, n_direct: int = 400, n_asym: int = 14) -> complex | float:
    """3F2(a1, a2, a3; b1, b2; 1).

    Direct summation of ``n_direct`` terms plus the tail from the large-k
    expansion of the term ratio of Gamma functions, each power ``k^(-p)``
    summed by Euler-Maclaurin.  Terms decay like ``k^(-1-s)`` with
    ``s = Re(b1 + b2 - a1 - a2 - a3)``; ``s > 0`` is required.
    """
    real_in = all(abs(complex(v).imag) == 0 for v in (a1, a2, a3, b1, b2))
    a = [complex(v) for v in (a1, a2, a3)]
    b = [complex(v) for v in (b1, b2)]
    for bb in b:
        if _is_nonpositive_integer(bb):
            raise PoleError(f"3F2 undefined for lower parameter {bb}")
    terminating = [int(round(-v.real)) for v in a if _is_nonpositive_integer(v)]
    if terminating:
        deg = min(terminating)
        s_sum, term = 1.0 + 0j, 1.0 + 0j
        for k in range(deg):
            term *= (a[0] + k) * (a[1] + k) * (a[2] + k) / ((b[0] + k) * (b[1] + k) * (k + 1.0))
            s_sum += term
        return s_sum.real if real_in else s_sum
    s = b[0] + b[1] - a[0] - a[1] - a[2]
    if s.real <= 0:
        raise ConvergenceError(f"3F2 at 1 diverges: Re(b1+b2-a1-a2-a3) = {s.real} <= 0")
    total, term = 1.0 + 0j, 1.0 + 0j
    for k in range(n_direct - 1):
        term *= (a[0] + k) * (a[1] + k) * (a[2] + k) / ((b[0] + k) * (b[1] + k) * (k + 1.0))
        total += term
    # log of Gamma ratio ~ -(1+s) log k + sum_m d_m k^-m
    tops = a
    bottoms = b + [1.0 + 0j]
    d = [0j] * (n_asym + 1)
    for mm in range(1, n_asym + 1):
        acc = sum(_bernoulli_poly(mm + 1, v) for v in tops) - sum(_bernoulli_poly(mm + 1, v) for v in bottoms)
        d[mm] = (-1) ** (mm + 1) * acc / (mm * (mm + 1))
    e = [0j] * (n_asym + 1)
    e[0] = 1.0 + 0j
    for mm in range(1, n_asym + 1):
        e[mm] = sum(j * d[j] * e[mm - j] for j in range(1, mm + 1)) / mm
    log_k = sum(loggamma(v) for v in b) - sum(loggamma(v) for v in a)
    K = cmath.exp(log_k)
    tail = sum(e[mm] * _power_tail(1.0 + s + mm, n_direct) for mm in range(n_asym + 1))
    val = total + K * tail
    return val.real if real_in else val


# ---------------------------------------------------------------------------
# Lauricella F_D Euler integral


def lauricella_fd(a, gam, betas, us, cycle=None, tol: float = 1e-11):
    """Euler integral  int t^(a-1) (1-t)^(gam-a-1) prod_j (1 - t u_j)^(-beta_j) dt.

    With ``cycle=None`` the integral runs over the real segment ``[0, 1]``
    (requires ``Re a > 0``, ``Re(gam - a) > 0`` and all ``1/u_j`` outside
    ``[0, 1]``).  Otherwise ``cycle`` is a closed :class:`~sle_euler.contour.Path`
    and the integrand is continued along it from the principal determination
    at the path's start (each factor written with positive real base on
    ``(0, 1)``).
    """
    betas = [complex(v) for v in betas]
    us = [complex(v) for v in us]
    if len(betas) != len(us):
        raise ValueError("betas and us must have equal length")
    for u in us:
        if u != 0 and 0.0 <= (1.0 / u).real <= 1.0 and abs((1.0 / u).imag) < 1e-14:
            raise ValueError(f"singularity 1/u = {1.0 / u} lies on [0, 1]")
    if cycle is None:
        from scipy.integrate import quad

        a_, g_ = complex(a), complex(gam)

        def f(t, part):
            v = t ** (a_ - 1) * (1 - t) ** (g_ - a_ - 1)
            for bj, uj in zip(betas, us):
                v *= (1 - t * uj) ** (-bj)
            return v.real if part == 0 else v.imag

        opts = dict(limit=400, epsabs=0.0, epsrel=tol)
        re = quad(f, 0.0, 1.0, args=(0,), **opts)[0]
        im = quad(f, 0.0, 1.0, args=(1,), **opts)[0]
        return complex(re, im) if abs(im) > 0 else re
    from .contour import MultiPowerIntegrand, integrate_branch_tracked

    sing = [0j, 1.0 + 0j] + [1.0 / u for u in us if u != 0]
    exps = [complex(a) - 1.0, complex(gam) - complex(a) - 1.0] + [-bj for bj, u in zip(betas, us) if u != 0]
    # (1 - t u)^(-b) = (-u)^(-b) (t - 1/u)^(-b); fold constants into the base phase
    t0 = cycle.start
    phase = (complex(a) - 1.0) * cmath.log(t0) + (complex(gam) - complex(a) - 1.0) * cmath.log(1.0 - t0)
    for bj, uj in zip(betas, us):
        if uj != 0:
            phase += -bj * cmath.log(1.0 - t0 * uj)
    f = MultiPowerIntegrand(tuple(sing), tuple(exps), base_point=t0, base_log=phase)
    return integrate_branch_tracked(f, cycle, tol=tol)


# ---------------------------------------------------------------------------
# n = 2 crossing function


def crossing_constant(kappa: float) -> float:
    return (
        gamma(4.0 / kappa) * gamma(12.0 / kappa - 1.0) / (gamma(8.0 / kappa) * gamma(8.0 / kappa - 1.0))
    )


def chordal_crossing(r: float, kappa: float) -> float:
    """Probability-normalized n = 2 solution as a function of the cross-ratio ``r``.

    ``C(kappa) r^(2/kappa) 2F1(4/kappa, 1 - 4/kappa; 8/kappa; r)``, vanishing at
    ``r = 0`` and equal to 1 at ``r = 1``; Cardy's formula at ``kappa = 6``.
    """
    r = float(r)
    kappa = float(kappa)
    if not 0.0 < kappa < 8.0:
        raise ValueError(f"chordal_crossing needs 0 < kappa < 8, got {kappa}")
    if not 0.0 <= r <= 1.0:
        raise ValueError(f"cross-ratio must lie in [0, 1], got {r}")
    if r == 0.0:
        return 0.0
    if r == 1.0:
        return 1.0
    F = hyp2f1(4.0 / kappa, 1.0 - 4.0 / kappa, 8.0 / kappa, r)
    return crossing_constant(kappa) * r ** (2.0 / kappa) * F


def cross_ratio(x1: float, x2: float, x3: float, x4: float) -> float:
    """``(x3-x2)(x4-x1) / ((x3-x1)(x4-x2))``: 0 when x2 meets x3, 1 when x1 meets x2."""
    return (x3 - x2) * (x4 - x1) / ((x3 - x1) * (x4 - x2))
