import cmath
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from sle_euler import specialfn as sf
from sle_euler.contour import (
    Arc,
    ContourError,
    MultiPowerIntegrand,
    Path,
    ProductCycle,
    ProductIntegrand,
    Segment,
    integrate_branch_tracked,
    integrate_product_cycle,
    lasso_loop,
    paths_intersect,
    pochhammer_loop,
)


def beta_integrand(p, q, a=0.0, b=1.0, r=0.2):
    # (u - a)^p (b - u)^q, real positive at the loop base a + r
    base = a + r
    return MultiPowerIntegrand((a, b), (p, q), base_point=base,
                               base_log=p * math.log(base - a) + q * math.log(b - base))


def beta_formula(p, q):
    return ((1 - cmath.exp(2j * math.pi * p)) * (1 - cmath.exp(2j * math.pi * q))
            * sf.gamma(p + 1) * sf.gamma(q + 1) / sf.gamma(p + q + 2))


def test_loop_structure():
    L = pochhammer_loop(0.0, 1.0, 0.1)
    assert L.closed
    assert L.base_point == pytest.approx(0.1)
    # winding numbers: the four small circles carry +1, +1, -1, -1 around b, a, b, a
    circles = [p for p in L.pieces if isinstance(p, Arc) and p.radius == pytest.approx(0.1)]
    turns = [(p.center.real, (p.theta1 - p.theta0) / (2 * math.pi)) for p in circles]
    assert turns == [(1.0, 1.0), (0.0, 1.0), (1.0, -1.0), (0.0, -1.0)]


def test_loop_is_affine_image():
    L0 = pochhammer_loop(0.0, 1.0, 0.1)
    L1 = pochhammer_loop(2.0, 3.0, 0.1)
    assert np.allclose(L0.transformed(1.0, 2.0).sample(), L1.sample())


@pytest.mark.parametrize("kw", [dict(clearance=0.6), dict(clearance=0.0), dict(clearance=-0.1)])
def test_clearance_errors(kw):
    with pytest.raises(ContourError):
        pochhammer_loop(0.0, 1.0, **kw)


def test_other_constructor_errors():
    with pytest.raises(ContourError):
        pochhammer_loop(1.0, 0.0)
    with pytest.raises(ValueError):
        pochhammer_loop(0.0, 1.0, bridge="zigzag")
    with pytest.raises(ContourError):
        pochhammer_loop(0.0, 1.0, bridge="box", height=-1)
    with pytest.raises(ContourError):
        lasso_loop(0.0, 1.0, 0.1)
    with pytest.raises(ContourError):
        Path((Segment(0j, 1 + 0j), Segment(2 + 0j, 3 + 0j)))
    with pytest.raises(ContourError):
        Path(())


def test_open_path_rejected():
    f = MultiPowerIntegrand((0.0,), (0.0,))
    with pytest.raises(ContourError):
        integrate_branch_tracked(f, Path((Segment(0j, 1 + 0j),)))


def test_beta_example_half():
    val = integrate_branch_tracked(beta_integrand(-0.5, -0.5), pochhammer_loop(0, 1, 0.2), 1e-12)
    assert abs(val - 4 * math.pi) <= 1e-10 * 4 * math.pi


def test_beta_example_fixed():
    val = integrate_branch_tracked(beta_integrand(0.3, 0.7), pochhammer_loop(0, 1, 0.2), 1e-12)
    ref = beta_formula(0.3, 0.7)
    assert abs(val - ref) <= 1e-10 * abs(ref)


def test_holomorphic_integrand_vanishes():
    f = MultiPowerIntegrand((0.0, 1.0), (0.0, 0.0))
    assert abs(integrate_branch_tracked(f, pochhammer_loop(0, 1), 1e-12)) < 1e-12


@given(st.floats(-0.95, 2.0), st.floats(-0.95, 2.0))
def test_beta_identity_random(p, q):
    ref = beta_formula(p, q)
    if abs(ref) < 1e-6:
        return
    val = integrate_branch_tracked(beta_integrand(p, q), pochhammer_loop(0, 1, 0.2), 1e-12)
    assert abs(val - ref) <= 1e-10 * abs(ref)


@pytest.mark.parametrize("r", [0.05, 0.15, 0.3, 0.45])
def test_clearance_invariance(r):
    p, q = -0.4, 0.25
    val = integrate_branch_tracked(beta_integrand(p, q, r=r), pochhammer_loop(0, 1, r), 1e-12)
    assert abs(val - beta_formula(p, q)) <= 1e-10 * abs(beta_formula(p, q))


@pytest.mark.parametrize("height", [0.1, 0.5, 2.0])
def test_box_bridge_matches_arc(height):
    f = beta_integrand(-0.3, -0.6)
    arc = integrate_branch_tracked(f, pochhammer_loop(0, 1, 0.2), 1e-12)
    box = integrate_branch_tracked(f, pochhammer_loop(0, 1, 0.2, bridge="box", height=height), 1e-12)
    assert abs(arc - box) <= 1e-10 * abs(arc)


def test_reversed_path_negates():
    f = beta_integrand(0.3, -0.45)
    L = pochhammer_loop(0, 1, 0.2)
    fwd = integrate_branch_tracked(f, L, 1e-12)
    back = integrate_branch_tracked(f, L.reversed(), 1e-12)
    assert L.reversed().base_point == pytest.approx(L.base_point)
    assert abs(fwd + back) <= 1e-10 * abs(fwd)


def test_path_json_round_trip():
    L = pochhammer_loop(0.5, 2.0, 0.3, bridge="box")
    M = Path.from_json(L.to_json())
    assert M == L
    assert M.length == pytest.approx(L.length)


def test_lasso_residue():
    f = MultiPowerIntegrand((0.0,), (-1.0,))
    val = integrate_branch_tracked(f, lasso_loop(2.0, 0.0, 0.3), 1e-12)
    assert abs(val - 2j * math.pi) < 1e-12


def test_lasso_multivalued():
    # (u - 0)^p around 0 from the anchor: the two tail traversals see different branches
    p = 0.37
    anchor, r = 1.0, 0.25
    f = MultiPowerIntegrand((0.0, anchor), (p, 0.0), base_point=r, base_log=p * math.log(r))
    val = integrate_branch_tracked(f, lasso_loop(anchor, 0.0, r), 1e-12)
    # the circle contributes the integral of u^p over the circle; the tail carries the
    # monodromy factor (e^{2 i pi p} - 1) times the integral from r to the anchor
    seg = (anchor ** (p + 1) - r ** (p + 1)) / (p + 1)
    circle = r ** (p + 1) * (cmath.exp(2j * math.pi * (p + 1)) - 1) / (p + 1)
    ref = circle + (cmath.exp(2j * math.pi * p) - 1) * seg
    assert abs(val - ref) <= 1e-10 * abs(ref)


def test_paths_intersect():
    a = pochhammer_loop(0, 1, 0.1)
    b = pochhammer_loop(2, 3, 0.1)
    c = pochhammer_loop(0.5, 2.5, 0.1)
    assert not paths_intersect([a, b])
    assert paths_intersect([a, c])


def _product_rule(p1, q1, p2, q2):
    pts = np.array([0.0, 1.0, 2.0, 3.0])
    E = np.array([[p1, q1, 0.0, 0.0], [0.0, 0.0, p2, q2]])
    # branch offset: make (u1 - 1) and (u2 - 3) positive-real at the bases, matching beta_integrand
    offset = -1j * math.pi * (q1 + q2)
    return ProductIntegrand(pts, E, None, offset)


def test_product_separable():
    p1, q1, p2, q2 = 0.3, -0.45, -0.2, 0.6
    cyc = ProductCycle((pochhammer_loop(0, 1, 0.2), pochhammer_loop(2, 3, 0.2)))
    val = integrate_product_cycle(_product_rule(p1, q1, p2, q2), cyc, 1e-11)
    one = integrate_branch_tracked(beta_integrand(p1, q1), cyc.factors[0], 1e-12)
    two = integrate_branch_tracked(beta_integrand(p2, q2, 2.0, 3.0), cyc.factors[1], 1e-12)
    assert abs(val - one * two) <= 1e-9 * abs(one * two)


def test_product_single_factor():
    phi = ProductIntegrand(np.array([0.0, 1.0]), np.array([[0.3, 0.7]]), None, -0.7j * math.pi)
    val = integrate_product_cycle(phi, ProductCycle((pochhammer_loop(0, 1, 0.2),)), 1e-12)
    assert abs(val - beta_formula(0.3, 0.7)) <= 1e-10 * abs(beta_formula(0.3, 0.7))


def test_product_cycle_json():
    cyc = ProductCycle((pochhammer_loop(0, 1, 0.2), pochhammer_loop(2, 3, 0.2)))
    assert ProductCycle.from_json(cyc.to_json()) == cyc
