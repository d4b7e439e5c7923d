"""Tests for quadrature rules."""

from math import factorial

import numpy as np
import pytest

from llbarfem.quadrature import collapsed_gauss_rule, high_rule, low_rule


def _triangle_monomial(a: int, b: int) -> float:
    """Exact integral of x^a y^b over the unit right triangle."""
    return factorial(a) * factorial(b) / factorial(a + b + 2)


def _rule_monomial(rule, a: int, b: int) -> float:
    # barycentric (l0, l1, l2) -> (x, y) = (l1, l2); reference area 1/2
    x, y = rule.points[:, 1], rule.points[:, 2]
    return 0.5 * float(np.sum(rule.weights * x**a * y**b))


class TestTriangleRules:
    """Exactness of the triangle rules."""

    @pytest.mark.parametrize("rule_factory,degree", [(low_rule, 2), (high_rule, 4)])
    def test_exact_up_to_degree(self, rule_factory, degree):
        rule = rule_factory(2)
        assert rule.degree == degree
        for a in range(degree + 1):
            for b in range(degree + 1 - a):
                expected = _triangle_monomial(a, b)
                assert _rule_monomial(rule, a, b) == pytest.approx(expected, rel=1e-13, abs=1e-16)

    @pytest.mark.parametrize("dim", [1, 2])
    def test_weights_normalised(self, dim):
        for rule in (low_rule(dim), high_rule(dim)):
            assert rule.weights.sum() == pytest.approx(1.0, abs=1e-15)
            np.testing.assert_allclose(rule.points.sum(axis=1), 1.0, atol=1e-15)
            assert np.all(rule.weights > 0)

    def test_point_counts(self):
        assert low_rule(2).n_points == 3
        assert high_rule(2).n_points == 6
        assert low_rule(1).n_points == 2
        assert high_rule(1).n_points == 3


class TestCollapsedGaussRule:
    """The oracle rule of arbitrary degree."""

    @pytest.mark.parametrize("n", [2, 4, 7])
    def test_exact_to_degree(self, n):
        rule = collapsed_gauss_rule(2, n)
        degree = 2 * n - 1
        for a in range(degree + 1):
            for b in range(degree + 1 - a):
                expected = _triangle_monomial(a, b)
                assert _rule_monomial(rule, a, b) == pytest.approx(expected, rel=1e-12, abs=1e-18)

    def test_segment(self):
        rule = collapsed_gauss_rule(1, 5)
        s = rule.points[:, 1]
        for p in range(10):
            assert float(np.sum(rule.weights * s**p)) == pytest.approx(1.0 / (p + 1), rel=1e-13)

    def test_points_inside_triangle(self):
        rule = collapsed_gauss_rule(2, 6)
        assert np.all(rule.points >= 0)
        assert np.all(rule.points <= 1)
