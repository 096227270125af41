"""Pointwise exterior calculus with finite-difference and dual derivatives."""

import numpy as np
import pytest

from ghqk.excalc import (
    CENTRAL,
    DUAL,
    DerivScheme,
    KForm,
    MetricField,
    VectorField,
    bracket,
    coordinate_form,
    d,
    function_form,
    interior,
    lie_form,
    lie_metric,
    partials,
    sup,
    wedge,
)

DIM = 4


def one_form():
    return KForm(1, DIM, lambda p: np.array([np.sin(p[1]) * p[2], p[0] ** 2, np.cos(p[3]) * p[0], p[1] * p[2]]))


def field_x():
    return VectorField(DIM, lambda p: np.array([p[1], -p[0], p[3] ** 2, 1.0]))


def field_y():
    return VectorField(DIM, lambda p: np.array([np.sin(p[2]), p[0] * p[3], 0.0, p[1]]))


class TestSchemes:
    """Derivative schemes and their validation."""

    def test_invalid_scheme(self):
        with pytest.raises(ValueError):
            DerivScheme(CENTRAL, -1.0)
        with pytest.raises(ValueError):
            DerivScheme(order=3)

    def test_partials_agree(self, rng):
        f = lambda p: np.sin(p[0]) * p[1] ** 3
        p = rng.normal(size=2)
        exact = np.array([np.cos(p[0]) * p[1] ** 3, 3 * np.sin(p[0]) * p[1] ** 2])
        assert sup(partials(f, p, DerivScheme(DUAL)) - exact) < 1e-14
        assert sup(partials(f, p, DerivScheme(CENTRAL, 1e-3, 4)) - exact) < 1e-9


class TestForms:
    """d, wedge, interior and Lie derivatives."""

    def test_dd_zero(self, rng):
        w = one_form()
        p = rng.normal(size=DIM)
        assert sup(d(d(w), DerivScheme(CENTRAL, 1e-3, 4).nested())(p)) < 1e-6

    def test_exact_form(self, rng):
        f = lambda p: p[0] * p[1] + np.sin(p[2])
        df = d(function_form(DIM, f))
        p = rng.normal(size=DIM)
        assert sup(df(p) - np.array([p[1], p[0], np.cos(p[2]), 0.0])) < 1e-9

    def test_wedge_antisymmetry(self, rng):
        a, b = coordinate_form(DIM, 0), coordinate_form(DIM, 2)
        p = rng.normal(size=DIM)
        ab = wedge(a, b)(p)
        assert np.isclose(ab[0, 2], 1.0) and np.isclose(ab[2, 0], -1.0)
        assert sup(ab + wedge(b, a)(p)) == 0.0

    def test_cartan_formula(self, rng):
        w, X = one_form(), field_x()
        p = rng.normal(size=DIM)
        sch = DerivScheme(CENTRAL, 1e-4, 4)
        lhs = lie_form(X, w, sch)(p)
        rhs = interior(X, d(w, sch))(p) + d(interior(X, w), sch)(p)
        assert sup(lhs - rhs) < 1e-8

    def test_bracket_of_rotations(self, rng):
        """[x1 d2 - x2 d1, x2 d3 - x3 d2] = x1 d3 - x3 d1 by hand expansion."""
        A = VectorField(3, lambda p: np.array([-p[1], p[0], 0.0]))
        B = VectorField(3, lambda p: np.array([0.0, -p[2], p[1]]))
        p = rng.normal(size=3)
        assert sup(bracket(A, B)(p) - np.array([-p[2], 0.0, p[0]])) < 1e-9

    def test_bracket_antisymmetric(self, rng):
        p = rng.normal(size=DIM)
        X, Y = field_x(), field_y()
        assert sup(bracket(X, Y)(p) + bracket(Y, X)(p)) < 1e-9

    def test_euclidean_rotation_is_killing(self, rng):
        g = MetricField(DIM, lambda p: np.eye(DIM))
        R = VectorField(DIM, lambda p: np.array([p[1], -p[0], 0.0, 0.0]))
        assert sup(lie_metric(R, g)(rng.normal(size=DIM))) < 1e-9

    def test_degenerate_metric_flagged(self):
        g = MetricField(2, lambda p: np.diag([1.0, 0.0]))
        with pytest.raises(np.linalg.LinAlgError):
            g.check_nondegenerate(np.zeros(2))
