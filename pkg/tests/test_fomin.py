from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from sle_euler.fomin import (
    check_nested,
    fomin_collapse_check,
    fomin_density,
    fomin_density_exact,
    fomin_determinant,
    fomin_determinant_exact,
    fomin_json,
)


def test_n1():
    assert fomin_determinant([0.5], [2.0]) == pytest.approx(1 / 2.25)
    assert fomin_density([0.5], [2.0]) == pytest.approx(1.0)


def test_exact_examples():
    assert fomin_determinant_exact([0, 1], [3, 2]) == Fraction(7, 144)
    assert fomin_density_exact([0, 1], [3, 2]) == Fraction(7, 16)
    assert fomin_determinant([0, 1], [3, 2]) == pytest.approx(7 / 144, rel=1e-15)
    assert fomin_density([0, 1], [3, 2]) == pytest.approx(7 / 16, rel=1e-15)


def test_exact_matches_float_n4():
    x, y = ["0", "0.5", "1.25", "2"], ["7", "5.5", "4", "3"]
    exact = fomin_density_exact(x, y)
    assert float(exact) == pytest.approx(fomin_density([float(v) for v in x], [float(v) for v in y]), rel=1e-12)


@given(st.permutations(range(3)))
def test_column_permutation_sign(perm):
    x, y = np.array([0.0, 1.0, 2.0]), np.array([6.0, 4.5, 3.0])
    sign = np.linalg.det(np.eye(3)[list(perm)])
    assert fomin_determinant(x, y[list(perm)]) == pytest.approx(sign * fomin_determinant(x, y), rel=1e-12)


def test_antisymmetry():
    assert fomin_determinant([0, 1], [2, 3]) == pytest.approx(-fomin_determinant([0, 1], [3, 2]))


@pytest.mark.parametrize("seed", range(100))
def test_density_is_probability(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 6))
    pts = np.sort(rng.uniform(-10, 10, 2 * n))
    x, y = pts[:n], pts[n:][::-1]
    d = fomin_density(x, y)
    assert -1e-12 <= d <= 1 + 1e-12


def test_ordering_errors():
    with pytest.raises(ValueError):
        fomin_density([0, 1], [2, 3])
    with pytest.raises(ValueError):
        check_nested([1, 0], [3, 2])
    with pytest.raises(ValueError):
        fomin_determinant([0, 1], [1, 2])
    with pytest.raises(ValueError):
        fomin_determinant([0, 1], [2])
    with pytest.raises(ValueError):
        fomin_determinant_exact([0, 1], [1, 2])


def test_separated_pairs_decorrelate():
    # inner pair on a much smaller scale than the outer one
    vals = [fomin_density([-(10.0 ** k), 0], [10.0 ** k, 1]) for k in (1, 2, 3, 4)]
    assert all(a < b for a, b in zip(vals[:-1], vals[1:]))
    assert 1 - vals[-1] < 1e-6


def test_mobius_invariance():
    x, y = np.array([0.0, 0.6, 1.1]), np.array([3.0, 2.1, 1.7])
    d = fomin_density(x, y)
    f = lambda t: (2 * t + 1) / (t + 5)  # noqa: E731  increasing on the points
    assert fomin_density(f(x), f(y)) == pytest.approx(d, rel=1e-12)


def test_collapse_n2():
    rep = fomin_collapse_check([0.0, 1.0], [3.0, 2.0], 1)
    assert rep.passed and rep.target == pytest.approx(1.0)
    rep = fomin_collapse_check([0.0, 1.0], [3.0, 2.0], 0)
    assert rep.passed


def test_collapse_n3():
    x, y = [0.0, 0.7, 1.5], [4.0, 3.1, 2.2]
    for i in (0, 2):
        rep = fomin_collapse_check(x, y, i)
        assert rep.passed, rep
        assert rep.rel_error < 1e-8
    with pytest.raises(ValueError):
        fomin_collapse_check(x, y, 1)
    with pytest.raises(IndexError):
        fomin_collapse_check(x, y, 3)


def test_collapse_n1_trivial():
    assert fomin_collapse_check([0.0], [1.0], 0).passed


def test_json():
    assert '"density": null' in fomin_json([0, 1], [2, 3])
    assert '"density": 0.4375' in fomin_json([0, 1], [3, 2])
