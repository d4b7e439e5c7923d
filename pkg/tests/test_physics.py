"""Tests for energy, nonlinear loads and Jacobians."""

import numpy as np
import pytest

from llbarfem.expressions import resolve_initial_data
from llbarfem.fem import FeSpace, VectorField, inner_mass, interpolate_nodal, norm, scatter_load
from llbarfem.mesh import build_structured_mesh
from llbarfem.models import ModelParams
from llbarfem.physics import (
    EnergyBranch,
    anisotropy_apply,
    anisotropy_matrix,
    cross_matrix,
    cubic_jacobian,
    cubic_load,
    effective_field,
    energy,
    energy_components,
    psi_jacobian,
    psi_load,
)
from llbarfem.quadrature import collapsed_gauss_rule


def _oracle_load(space: FeSpace, pointwise):
    """<g(fields), phi_i e_c> with a degree-7 collapsed Gauss rule."""
    rule = collapsed_gauss_rule(space.mesh.dim, 4)

    def load(*fields: VectorField) -> np.ndarray:
        values = pointwise(*(f.at(rule) for f in fields))
        local = np.einsum("eq,qi,eqc->eic", space.element_weights(rule), rule.points, values)
        return scatter_load(space, local)

    return load


def _central_difference_jacobian(load, x: VectorField, eps: float = 1e-6) -> np.ndarray:
    space = x.space
    columns = []
    for j in range(space.n_dofs):
        step = np.zeros(space.n_dofs)
        step[j] = eps
        plus = load(VectorField(space, x.coeffs + step))
        minus = load(VectorField(space, x.coeffs - step))
        columns.append((plus - minus) / (2 * eps))
    return np.column_stack(columns)


@pytest.fixture
def small_space():
    return FeSpace(build_structured_mesh(2, 2))


class TestEnergy:
    """Tests for energy and energy_components."""

    def test_constant_minimiser_has_zero_energy(self, space):
        p = ModelParams(lambda_r=1.0, lambda_e=0.0, gamma=1.0, kappa=2.0, mu=1.5, beta=0.0)
        u = space.constant([np.sqrt(1.5), 0.0, 0.0])
        assert energy(space, p, u) == pytest.approx(0.0, abs=1e-13)

    def test_origin_branch_zero_at_zero(self, space, sim2_params):
        assert energy(space, sim2_params, space.zero()) == 0.0

    def test_branch_offset(self, space_2d, random_field, sim1_params):
        u = random_field(space_2d)
        well = energy(space_2d, sim1_params, u, EnergyBranch.DOUBLE_WELL)
        origin = energy(space_2d, sim1_params, u, EnergyBranch.ORIGIN)
        offset = sim1_params.kappa * sim1_params.mu**2 / 4.0
        assert well - origin == pytest.approx(offset, rel=1e-10)

    def test_auto_branch_follows_mu(self, space_2d, random_field, sim1_params, sim2_params):
        u = random_field(space_2d)
        assert energy(space_2d, sim1_params, u) == energy(space_2d, sim1_params, u, "double_well")
        assert energy(space_2d, sim2_params, u) == energy(space_2d, sim2_params, u, "origin")

    def test_components(self, space):
        p = ModelParams(lambda_r=1.0, lambda_e=0.0, gamma=1.0, kappa=1.0, mu=0.0, beta=2.0, e_axis=(1, 0, 0))
        zeros = np.zeros(space.n_nodes)
        u = VectorField(space, np.column_stack([space.mesh.nodes[:, 0], zeros, zeros]).ravel())
        parts = energy_components(space, p, u)
        assert parts["exchange"] == pytest.approx(0.5, rel=1e-13)
        # kappa/4 int x^4 = 1/20, anisotropy beta/2 int x^2 = 1/3
        assert parts["internal"] == pytest.approx(0.05, rel=1e-13)
        assert parts["anisotropy"] == pytest.approx(1.0 / 3.0, rel=1e-13)
        assert parts["total"] == pytest.approx(0.5 + 0.05 + 1.0 / 3.0, rel=1e-13)

    def test_gradient_is_minus_effective_field(self, small_space, random_field, sim1_params):
        """dE(u)[v] = -<H(u), v>."""
        u = random_field(small_space, 0.5)
        v = random_field(small_space)
        eps = 1e-5
        derivative = (
            energy(small_space, sim1_params, u + eps * v) - energy(small_space, sim1_params, u - eps * v)
        ) / (2 * eps)
        h = effective_field(small_space, sim1_params, u)
        assert derivative == pytest.approx(-inner_mass(small_space, h, v), rel=1e-6, abs=1e-8)


class TestEffectiveField:
    """Tests for effective_field."""

    def test_zero_at_constant_minimiser(self, space):
        p = ModelParams(lambda_r=1.0, lambda_e=0.0, gamma=1.0, kappa=3.0, mu=0.7, beta=0.0)
        u = space.constant([0.0, np.sqrt(0.7), 0.0])
        h = effective_field(space, p, u)
        np.testing.assert_allclose(h.coeffs, 0.0, atol=1e-12)

    def test_zero_field(self, space, sim2_params):
        h = effective_field(space, sim2_params, space.zero())
        np.testing.assert_array_equal(h.coeffs, np.zeros(space.n_dofs))

    def test_defining_relation(self, space_2d, random_field, sim2_params):
        u = random_field(space_2d)
        h = effective_field(space_2d, sim2_params, u)
        rhs = (
            -(space_2d.stiffness_blocks @ u.coeffs)
            + sim2_params.kappa * sim2_params.mu * (space_2d.mass_blocks @ u.coeffs)
            - sim2_params.kappa * cubic_load(space_2d, u)
            - sim2_params.beta * (anisotropy_matrix(sim2_params, space_2d.mass) @ u.coeffs)
        )
        np.testing.assert_allclose(space_2d.mass_blocks @ h.coeffs, rhs, atol=1e-10)


class TestLoads:
    """Loads against an independent high-degree rule."""

    def test_cubic_load(self, space, random_field):
        u = random_field(space)
        oracle = _oracle_load(space, lambda a: np.sum(a**2, axis=2, keepdims=True) * a)
        np.testing.assert_allclose(cubic_load(space, u), oracle(u), rtol=1e-12, atol=1e-13)

    def test_cross_matrix(self, space, random_field):
        w = random_field(space)
        y = random_field(space)
        oracle = _oracle_load(space, lambda a, b: np.cross(a, b))
        np.testing.assert_allclose(cross_matrix(space, w) @ y.coeffs, oracle(w, y), rtol=1e-12, atol=1e-13)

    def test_psi_load(self, space, random_field):
        a = random_field(space)
        b = random_field(space)

        def psi(x, y):
            s = np.sum(x**2, axis=2, keepdims=True) + np.sum(y**2, axis=2, keepdims=True)
            return 0.25 * s * (x + y)

        oracle = _oracle_load(space, psi)
        np.testing.assert_allclose(psi_load(space, a, b), oracle(a, b), rtol=1e-12, atol=1e-13)

    def test_psi_reduces_to_cubic(self, space, random_field):
        u = random_field(space)
        np.testing.assert_allclose(psi_load(space, u, u), cubic_load(space, u), rtol=1e-13, atol=1e-14)

    def test_anisotropy_apply_matches_matrix(self, space, random_field, sim2_params):
        u = random_field(space)
        np.testing.assert_allclose(
            anisotropy_apply(sim2_params, space.mass, u.coeffs),
            anisotropy_matrix(sim2_params, space.mass) @ u.coeffs,
            rtol=1e-13,
            atol=1e-15,
        )


class TestJacobians:
    """Analytic Jacobians against central differences."""

    def test_cubic_jacobian(self, small_space, random_field):
        u = random_field(small_space)
        numeric = _central_difference_jacobian(lambda v: cubic_load(small_space, v), u)
        np.testing.assert_allclose(cubic_jacobian(small_space, u).toarray(), numeric, rtol=1e-6, atol=1e-8)

    def test_cubic_jacobian_symmetric(self, space, random_field):
        dense = cubic_jacobian(space, random_field(space)).toarray()
        np.testing.assert_allclose(dense, dense.T, atol=1e-13)

    def test_psi_jacobian(self, small_space, random_field):
        a = random_field(small_space)
        b = random_field(small_space)
        numeric = _central_difference_jacobian(lambda v: psi_load(small_space, a, v), b)
        np.testing.assert_allclose(psi_jacobian(small_space, a, b).toarray(), numeric, rtol=1e-6, atol=1e-8)

    def test_cross_matrix_antisymmetric(self, space, random_field):
        dense = cross_matrix(space, random_field(space)).toarray()
        np.testing.assert_allclose(dense, -dense.T, atol=1e-13)


class TestVectorIdentities:
    """Discrete identities that the energy estimates rely on."""

    def test_cross_product_orthogonal(self, space_2d, random_field):
        for _ in range(20):
            w = random_field(space_2d)
            y = random_field(space_2d)
            value = y.coeffs @ (cross_matrix(space_2d, w) @ y.coeffs)
            assert abs(value) <= 1e-12 * max(1.0, norm(space_2d, y, "L2") ** 2 * norm(space_2d, w, "Linf"))

    def test_psi_difference_of_quartics(self, space, random_field):
        """<psi(a, b), b - a> = (||b||_L4^4 - ||a||_L4^4) / 4."""
        for _ in range(20):
            a = random_field(space)
            b = random_field(space)
            lhs = psi_load(space, a, b) @ (b - a).coeffs
            rhs = 0.25 * (norm(space, b, "L4") ** 4 - norm(space, a, "L4") ** 4)
            assert lhs == pytest.approx(rhs, rel=1e-10, abs=1e-12)

    def test_cubic_load_pairs_to_l4(self, space, random_field):
        u = random_field(space)
        assert cubic_load(space, u) @ u.coeffs == pytest.approx(norm(space, u, "L4") ** 4, rel=1e-12)

    def test_cubic_load_is_monotone(self, space, random_field):
        """(b(U) - b(V)) . (U - V) >= 0 for b the cubic load."""
        for _ in range(20):
            u = random_field(space)
            v = random_field(space, 2.0)
            value = (cubic_load(space, u) - cubic_load(space, v)) @ (u - v).coeffs
            assert value >= -1e-12


class TestPointwiseIdentities:
    """Pointwise vector identities behind the discrete energy laws, on random samples."""

    @pytest.fixture
    def pairs(self, rng):
        a = rng.standard_normal((1000, 3)) * rng.uniform(0.1, 10.0, (1000, 1))
        b = rng.standard_normal((1000, 3)) * rng.uniform(0.1, 10.0, (1000, 1))
        return a, b

    @staticmethod
    def _sq(v: np.ndarray) -> np.ndarray:
        return np.sum(v**2, axis=1)

    def test_quadratic(self, pairs):
        a, b = pairs
        lhs = 2.0 * np.sum(a * (a - b), axis=1)
        rhs = self._sq(a) - self._sq(b) + self._sq(a - b)

        scale = self._sq(a) + self._sq(b)
        assert np.all(np.abs(lhs - rhs) <= 1e-12 * scale)

    def test_quartic(self, pairs):
        a, b = pairs
        lhs = 4.0 * self._sq(a) * np.sum(a * (a - b), axis=1)
        rhs = (
            self._sq(a) ** 2
            - self._sq(b) ** 2
            + (self._sq(a) - self._sq(b)) ** 2
            + 2.0 * self._sq(a) * self._sq(a - b)
        )

        scale = (self._sq(a) + self._sq(b)) ** 2
        assert np.all(np.abs(lhs - rhs) <= 1e-12 * scale)

    def test_cubic_difference(self, pairs):
        a, b = pairs
        lhs = 2.0 * np.sum((self._sq(a)[:, None] * a - self._sq(b)[:, None] * b) * (a - b), axis=1)
        rhs = (self._sq(a) - self._sq(b)) ** 2 + (self._sq(a) + self._sq(b)) * self._sq(a - b)

        scale = (self._sq(a) + self._sq(b)) ** 2
        assert np.all(np.abs(lhs - rhs) <= 1e-12 * scale)
        assert np.all(lhs >= -1e-12 * scale)

    def test_cross_product(self, pairs):
        a, b = pairs
        c = np.cross(a, b)

        scale = self._sq(a) * np.sqrt(self._sq(b))
        assert np.all(np.abs(np.sum(a * c, axis=1)) <= 1e-12 * scale)


class TestEnergyOracle:
    """The assembled energy against an independent high-order quadrature."""

    def test_sim2_field_on_fine_mesh(self, sim2_params):
        space = FeSpace(build_structured_mesh(2, 32))
        u = interpolate_nodal(space, resolve_initial_data("sim2"))
        p = sim2_params
        rule = collapsed_gauss_rule(2, 7)
        weights = space.element_weights(rule)
        values = u.at(rule)
        sq = np.sum(values**2, axis=2)

        exchange = 0.5 * float(np.sum(space.measures[:, None, None] * u.gradient() ** 2))
        internal = 0.25 * p.kappa * float(np.sum(weights * sq**2)) - 0.5 * p.kappa * p.mu * float(
            np.sum(weights * sq)
        )
        anisotropy = 0.5 * p.beta * float(np.sum(weights * (values @ p.e) ** 2))
        expected = exchange + internal + anisotropy

        assert energy(space, p, u) == pytest.approx(expected, rel=1e-8)
