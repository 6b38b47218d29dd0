import cmath
import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from sle_euler import specialfn as sf
from sle_euler.contour import pochhammer_loop

mp.mp.dps = 30

finite = dict(allow_nan=False, allow_infinity=False)


def _rel(a, b):
    return abs(complex(a) - complex(b)) / abs(complex(b))


# ---------------------------------------------------------------------------
# Gamma


@pytest.mark.parametrize("z,expected", [(0.5, math.sqrt(math.pi)), (5, 24.0), (1, 1.0), (-0.5, -2 * math.sqrt(math.pi))])
def test_gamma_values(z, expected):
    assert sf.gamma(z) == pytest.approx(expected, rel=1e-14)


def test_gamma_two_thirds_oracle():
    assert _rel(sf.gamma(2 / 3), mp.gamma(mp.mpf(2) / 3)) < 1e-14


def test_gamma_real_input_gives_float():
    assert isinstance(sf.gamma(2.5), float)
    assert isinstance(sf.gamma(2.5 + 0j), complex)


@pytest.mark.parametrize("z", [0, -1, -7, -3.0 + 0j])
def test_gamma_poles(z):
    with pytest.raises(sf.PoleError):
        sf.gamma(z)
    with pytest.raises(sf.PoleError):
        sf.loggamma(z)
    assert sf.rgamma(z) == 0.0


@given(st.floats(-50, 50, **finite), st.floats(-50, 50, **finite))
def test_gamma_vs_mpmath(re, im):
    z = complex(re, im)
    assume(abs(z) <= 50)
    assume(abs(im) > 1e-3 or abs(re - round(re)) > 1e-3)
    ref = mp.gamma(mp.mpc(re, im))
    if ref == 0 or abs(ref) > 1e300 or abs(ref) < 1e-300:
        return
    assert _rel(sf.gamma(z), ref) <= 1e-13


@given(st.floats(-20, 20, **finite), st.floats(-5, 5, **finite))
def test_gamma_reflection(re, im):
    z = complex(re, im)
    assume(abs(im) > 1e-3 or abs(re - round(re)) > 1e-2)
    val = sf.gamma(z) * sf.gamma(1 - z) * cmath.sin(math.pi * z) / math.pi
    assert abs(val - 1) <= 1e-12


@given(st.floats(0.1, 30, **finite), st.floats(-30, 30, **finite))
def test_loggamma_exponentiates_to_gamma(re, im):
    z = complex(re, im)
    lg = sf.loggamma(z)
    ref = mp.loggamma(mp.mpc(re, im))
    d = complex(lg) - complex(ref)
    assert abs(d.real) < 1e-12 * max(1.0, abs(ref))
    k = d.imag / (2 * math.pi)
    assert abs(k - round(k)) < 1e-10


def test_beta_and_digamma():
    assert sf.beta(0.5, 0.5) == pytest.approx(math.pi, rel=1e-14)
    for z in (0.3, 2.7, -1.4, 15.0, 1 + 2j):
        assert _rel(sf.digamma(z), mp.digamma(z)) < 1e-12


def test_sinpi_large_argument():
    assert abs(sf.sinpi(1e6 + 0.5) - 1) < 1e-15
    assert abs(sf.sinpi(3.0)) < 1e-15


# ---------------------------------------------------------------------------
# 2F1


@given(st.floats(-5, 5, **finite))
def test_hyp2f1_terminating(r):
    assert sf.hyp2f1(2, -1, 4, r) == pytest.approx(1 - r / 2, rel=1e-14, abs=1e-14)


def test_hyp2f1_params_form_and_zero():
    p = sf.HypergeometricParams(0.3, 1.7, 2.2)
    assert sf.hyp2f1(p, 0.0) == 1.0
    assert sf.hyp2f1(p, 0.4) == sf.hyp2f1(0.3, 1.7, 2.2, 0.4)


def test_hyp2f1_oracle_example():
    ref = mp.hyp2f1(mp.mpf(1) / 3, mp.mpf(1) / 3, mp.mpf(1) / 2, mp.mpf("0.3"))
    assert _rel(sf.hyp2f1(1 / 3, 1 / 3, 0.5, 0.3), ref) < 1e-14


@given(
    st.floats(-2.5, 2.5, **finite),
    st.floats(-2.5, 2.5, **finite),
    st.floats(0.2, 4.0, **finite),
    st.floats(-3.0, 0.999, **finite),
)
def test_hyp2f1_vs_mpmath(a, b, c, z):
    ref = mp.hyp2f1(a, b, c, z)
    if abs(ref) < 1e-6 or abs(ref) > 1e8:
        return
    assert _rel(sf.hyp2f1(a, b, c, z), ref) < 1e-9


@pytest.mark.parametrize("a,b,c", [(1.0, 1.0, 2.0), (0.5, 0.5, 1.0), (1 / 3, 2 / 3, 3.0), (0.25, 0.75, 1.0)])
@pytest.mark.parametrize("z", [0.8, 0.95, 0.999])
def test_hyp2f1_log_cases(a, b, c, z):
    # integer c - a - b goes through the logarithmic connection
    assert _rel(sf.hyp2f1(a, b, c, z), mp.hyp2f1(a, b, c, z)) < 1e-11


@given(st.floats(0.05, 0.95, **finite))
def test_hyp2f1_contiguity(z):
    # Gauss relation: c(c-1)(z-1) F(c-1) + c[c-1-(2c-a-b-1)z] F(c) + (c-a)(c-b) z F(c+1) = 0
    a, b, c = 0.4, 1.3, 2.6
    F = lambda cc: sf.hyp2f1(a, b, cc, z)  # noqa: E731
    terms = [c * (c - 1) * (z - 1) * F(c - 1), c * (c - 1 - (2 * c - a - b - 1) * z) * F(c),
             (c - a) * (c - b) * z * F(c + 1)]
    assert abs(sum(terms)) <= 1e-12 * sum(abs(t) for t in terms)


def test_hyp2f1_at_one():
    assert sf.hyp2f1(0.2, 0.3, 1.5, 1.0) == pytest.approx(float(mp.hyp2f1(0.2, 0.3, 1.5, 1)), rel=1e-13)
    with pytest.raises(sf.ConvergenceError):
        sf.hyp2f1(1.0, 1.0, 1.5, 1.0)
    with pytest.raises(sf.PoleError):
        sf.hyp2f1(1.0, 1.0, -2.0, 0.5)


def test_hyp2f1_complex_argument():
    z = 0.3 + 0.4j
    assert _rel(sf.hyp2f1(0.5, 1.5, 2.5, z), mp.hyp2f1(0.5, 1.5, 2.5, z)) < 1e-13


# ---------------------------------------------------------------------------
# 3F2 at 1


def test_hyp3f2_reduces_to_gauss_sum():
    val = sf.hyp3f2_at_one(0.5, 1 / 3, 1 / 3, 1.0, 0.5)
    assert val == pytest.approx(float(sf.gamma(1 / 3) / sf.gamma(2 / 3) ** 2), rel=1e-12)


@given(st.floats(-3, 3, **finite), st.floats(-3, 3, **finite), st.floats(0.5, 3, **finite), st.floats(0.5, 3, **finite))
def test_hyp3f2_terminates_for_zero_parameter(a1, a2, b1, b2):
    assert sf.hyp3f2_at_one(a1, a2, 0.0, b1, b2) == 1.0


def test_hyp3f2_oracle_values():
    ref = mp.hyp3f2(1, mp.mpf(5) / 6, mp.mpf(5) / 6, 1.5, 1.5, 1)
    assert _rel(sf.hyp3f2_at_one(1.0, 5 / 6, 5 / 6, 1.5, 1.5), ref) < 1e-13
    ref = mp.hyp3f2(0.3, 0.7, 1.1, 1.4, 1.9, 1)
    assert _rel(sf.hyp3f2_at_one(0.3, 0.7, 1.1, 1.4, 1.9), ref) < 1e-12


def test_hyp3f2_double_integral_route():
    # B(1, 1/2) 3F2(1,5/6,5/6;3/2,3/2;1) = int_0^1 (1-s)^{-1/2} 2F1(5/6,5/6;3/2;s) ds
    # s = 1 - t^3 plus Euler's transformation leaves 3 2F1(2/3, 2/3; 3/2; 1 - t^3), finite at t = 0
    inner = lambda t: 3 * mp.hyp2f1(mp.mpf(2) / 3, mp.mpf(2) / 3, 1.5, 1 - t ** 3)  # noqa: E731
    with mp.workdps(20):
        val = float(mp.quad(inner, [0, 0.5, 1]))
    assert val == pytest.approx(2 * sf.hyp3f2_at_one(1.0, 5 / 6, 5 / 6, 1.5, 1.5), rel=1e-8)


def test_hyp3f2_divergent():
    with pytest.raises(sf.ConvergenceError):
        sf.hyp3f2_at_one(1, 1, 1, 1.5, 1.5)
    with pytest.raises(sf.PoleError):
        sf.hyp3f2_at_one(1, 1, 1, -1, 5)


# ---------------------------------------------------------------------------
# Lauricella F_D


def test_lauricella_beta_cases():
    assert sf.lauricella_fd(0.4, 1.3, [], []) == pytest.approx(float(sf.beta(0.4, 0.9)), rel=1e-11)
    assert sf.lauricella_fd(0.4, 1.3, [0.0, 0.0], [0.3, -2.0]) == pytest.approx(float(sf.beta(0.4, 0.9)), rel=1e-11)


def test_lauricella_oracle():
    a, gam = 1 / 3, 8 / 3
    us = (0.2, 0.4, 0.6)
    f = lambda t: t ** (a - 1) * (1 - t) ** (gam - a - 1) * mp.fprod((1 - t * u) ** (-mp.mpf(2) / 3) for u in us)  # noqa: E731
    ref = mp.quad(f, [0, 1])
    assert _rel(sf.lauricella_fd(a, gam, [2 / 3] * 3, us), ref) < 1e-10


def test_lauricella_pochhammer_cycle():
    a, gam = 0.3, 1.9
    betas, us = [0.7], [0.4]
    seg = sf.lauricella_fd(a, gam, betas, us)
    loop = pochhammer_loop(0.0, 1.0, 0.2)
    val = sf.lauricella_fd(a, gam, betas, us, cycle=loop)
    factor = (1 - cmath.exp(2j * math.pi * a)) * (1 - cmath.exp(2j * math.pi * (gam - a)))
    assert abs(val - factor * seg) <= 1e-9 * abs(factor * seg)


def test_lauricella_gauss_reduction():
    # one variable: B(a, gam-a) 2F1(beta, a; gam; u)
    a, gam, b, u = 0.6, 2.1, 0.9, 0.35
    val = sf.lauricella_fd(a, gam, [b], [u])
    assert val == pytest.approx(float(sf.beta(a, gam - a)) * sf.hyp2f1(b, a, gam, u), rel=1e-11)


def test_lauricella_errors():
    with pytest.raises(ValueError):
        sf.lauricella_fd(0.5, 1.5, [0.5], [2.0])
    with pytest.raises(ValueError):
        sf.lauricella_fd(0.5, 1.5, [0.5, 0.5], [0.1])


# ---------------------------------------------------------------------------
# crossing function


def test_crossing_examples():
    assert sf.chordal_crossing(0.5, 2) == pytest.approx(0.75, abs=1e-14)
    assert sf.chordal_crossing(0.5, 6) == pytest.approx(0.5, abs=1e-14)
    for k in (1.0, 2.5, 4.0, 6.0, 7.5):
        assert sf.chordal_crossing(0.0, k) == 0.0
        assert sf.chordal_crossing(1.0, k) == 1.0


@pytest.mark.parametrize("r", np.linspace(0.01, 0.99, 25))
def test_crossing_kappa2_closed_form(r):
    assert abs(sf.chordal_crossing(r, 2.0) - (1 - (1 - r) ** 2)) <= 1e-12


@given(st.floats(0.001, 0.999, **finite))
def test_crossing_kappa6_is_cardy(r):
    # regularized incomplete Beta I_r(1/3, 1/3); symmetric under r -> 1 - r
    ref = float(mp.betainc(mp.mpf(1) / 3, mp.mpf(1) / 3, 0, r, regularized=True))
    assert sf.chordal_crossing(r, 6.0) == pytest.approx(ref, abs=1e-12)
    assert sf.chordal_crossing(r, 6.0) + sf.chordal_crossing(1 - r, 6.0) == pytest.approx(1.0, abs=1e-12)


@given(st.floats(0.5, 7.9, **finite), st.floats(0.01, 0.98, **finite))
def test_crossing_monotone(k, r):
    assert 0 <= sf.chordal_crossing(r, k) <= sf.chordal_crossing(min(r + 0.01, 1.0), k) + 1e-12 <= 1 + 1e-12


@pytest.mark.parametrize("r,k", [(-0.1, 2), (1.1, 2), (0.5, 0), (0.5, 8), (0.5, -1)])
def test_crossing_errors(r, k):
    with pytest.raises(ValueError):
        sf.chordal_crossing(r, k)


def test_cross_ratio_limits():
    assert sf.cross_ratio(0, 1, 2, 3) == pytest.approx(0.75, rel=1e-15)
    assert sf.cross_ratio(0, 1, 1 + 1e-12, 3) < 1e-11
    assert sf.cross_ratio(0, 1e-12, 2, 3) > 1 - 1e-11
