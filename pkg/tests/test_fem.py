"""Tests for the P1 vector finite element space."""

import numpy as np
import pytest
import sympy

from llbarfem.errors import MeshMismatchError
from llbarfem.fem import (
    FeSpace,
    VectorField,
    apply_discrete_laplacian,
    assemble_mass,
    assemble_stiffness,
    inner_mass,
    inner_stiffness,
    interpolate_nodal,
    l2_project,
    load_vector,
    mean,
    norm,
    prolong,
    ritz_project,
    scatter_load,
    scatter_matrix,
)
from llbarfem.mesh import build_structured_mesh, coarse_node_indices, refine_uniform
from llbarfem.quadrature import collapsed_gauss_rule


def _symbolic_local_matrices():
    """Mass and stiffness of the unit right triangle by symbolic integration."""
    x, y = sympy.symbols("x y")
    basis = [1 - x - y, x, y]
    mass = sympy.zeros(3, 3)
    stiffness = sympy.zeros(3, 3)
    for i, pi in enumerate(basis):
        for j, pj in enumerate(basis):
            mass[i, j] = sympy.integrate(pi * pj, (y, 0, 1 - x), (x, 0, 1))
            grad = sympy.diff(pi, x) * sympy.diff(pj, x) + sympy.diff(pi, y) * sympy.diff(pj, y)
            stiffness[i, j] = sympy.integrate(grad, (y, 0, 1 - x), (x, 0, 1))
    return np.array(mass.tolist(), dtype=float), np.array(stiffness.tolist(), dtype=float)


def _affine(points):
    x = points[:, 0]
    y = points[:, 1] if points.shape[1] > 1 else 0.0 * x
    return np.stack([1.0 + 2.0 * x - y, 3.0 * y, -0.5 + x], axis=1)


def _affine_gradient(points):
    grads = np.zeros((points.shape[0], 3, points.shape[1]))
    grads[:, 0, 0] = 2.0
    grads[:, 2, 0] = 1.0
    if points.shape[1] > 1:
        grads[:, 0, 1] = -1.0
        grads[:, 1, 1] = 3.0
    return grads


def _quadratic(points):
    x, y = points[:, 0], points[:, 1]
    return np.stack([x**2, x * y, y**2 - x], axis=1)


def _quadratic_gradient(points):
    x, y = points[:, 0], points[:, 1]
    grads = np.zeros((points.shape[0], 3, 2))
    grads[:, 0, 0] = 2.0 * x
    grads[:, 1, 0] = y
    grads[:, 1, 1] = x
    grads[:, 2, 0] = -1.0
    grads[:, 2, 1] = 2.0 * y
    return grads


class TestMassMatrix:
    """Tests for assemble_mass."""

    def test_sum_is_domain_measure(self, space):
        assert assemble_mass(space).sum() == pytest.approx(1.0, abs=1e-14)

    def test_single_cell_matches_symbolic(self):
        """Each triangle of area 1/2 contributes (A/12)[[2,1,1],[1,2,1],[1,1,2]]."""
        space = FeSpace(build_structured_mesh(2, 1))
        mass_ref, _ = _symbolic_local_matrices()
        pattern = np.array([[2, 1, 1], [1, 2, 1], [1, 1, 2]])
        np.testing.assert_allclose(mass_ref, (0.5 / 12) * pattern, atol=1e-15)
        expected = np.zeros((4, 4))
        for element in space.mesh.elements:
            expected[np.ix_(element, element)] += mass_ref
        np.testing.assert_allclose(assemble_mass(space).toarray(), expected, atol=1e-13)

    def test_symmetric_positive_definite(self, space, rng):
        mass = assemble_mass(space)
        dense = mass.toarray()
        np.testing.assert_allclose(dense, dense.T, atol=1e-16)
        for _ in range(5):
            x = rng.standard_normal(space.n_nodes)
            assert x @ (mass @ x) > 0

    def test_high_degree_rule_agrees(self, space_2d):
        rule = collapsed_gauss_rule(2, 4)
        phi = rule.points
        local = np.einsum("e,q,qi,qj->eij", space_2d.measures, rule.weights, phi, phi)
        oracle = scatter_matrix(space_2d, local)
        np.testing.assert_allclose(assemble_mass(space_2d).toarray(), oracle.toarray(), atol=1e-13)


class TestStiffnessMatrix:
    """Tests for assemble_stiffness."""

    def test_constants_in_kernel(self, space):
        stiffness = assemble_stiffness(space)
        np.testing.assert_allclose(stiffness @ np.ones(space.n_nodes), 0.0, atol=1e-13)

    def test_unit_right_triangle_symbolic(self):
        _, stiffness_ref = _symbolic_local_matrices()
        pattern = np.array([[2, -1, -1], [-1, 1, 0], [-1, 0, 1]])
        np.testing.assert_allclose(stiffness_ref, 0.5 * pattern, atol=1e-15)

    def test_single_cell(self):
        """Both triangles of the unit cell against gradients from the vertex matrix."""
        space = FeSpace(build_structured_mesh(2, 1))
        expected = np.zeros((4, 4))
        for element in space.mesh.elements:
            vertex_matrix = np.column_stack([np.ones(3), space.mesh.nodes[element]])
            grads = np.linalg.inv(vertex_matrix)[1:].T
            area = 0.5 * abs(np.linalg.det(vertex_matrix))
            expected[np.ix_(element, element)] += area * grads @ grads.T
        np.testing.assert_allclose(assemble_stiffness(space).toarray(), expected, atol=1e-13)

    def test_positive_semidefinite(self, space, rng):
        stiffness = assemble_stiffness(space)
        for _ in range(5):
            x = rng.standard_normal(space.n_nodes)
            assert x @ (stiffness @ x) >= -1e-14

    def test_1d_stencil(self, space_1d):
        n = space_1d.mesh.divisions
        dense = assemble_stiffness(space_1d).toarray()
        assert dense[0, 0] == pytest.approx(n)
        assert dense[1, 1] == pytest.approx(2 * n)
        assert dense[0, 1] == pytest.approx(-n)


class TestInterpolation:
    """Tests for interpolate_nodal."""

    def test_sim1_value_at_origin(self, space_2d):
        def u0(points):
            x, y = points[:, 0], points[:, 1]
            c, s = np.cos(2 * np.pi * x), np.sin(2 * np.pi * y)
            return np.stack([c, s, 2 * c * s], axis=1)

        field = interpolate_nodal(space_2d, u0)
        np.testing.assert_allclose(field.nodal[0], [1.0, 0.0, 0.0], atol=1e-15)

    def test_affine_reproduced_everywhere(self, space):
        field = interpolate_nodal(space, _affine)
        rule = collapsed_gauss_rule(space.mesh.dim, 3)
        points = space.quadrature_points(rule).reshape(-1, space.mesh.dim)
        np.testing.assert_allclose(field.at(rule).reshape(-1, 3), _affine(points), atol=1e-13)

    def test_constant_field(self, space):
        field = interpolate_nodal(space, lambda p: np.tile([0.2, -1.0, 3.0], (p.shape[0], 1)))
        np.testing.assert_array_equal(field.nodal, np.tile([0.2, -1.0, 3.0], (space.n_nodes, 1)))


class TestL2Projection:
    """Tests for l2_project."""

    def test_affine_is_fixed(self, space):
        projected = l2_project(space, _affine)
        np.testing.assert_allclose(projected.coeffs, interpolate_nodal(space, _affine).coeffs, atol=1e-10)

    def test_matches_dense_solve(self):
        space = FeSpace(build_structured_mesh(2, 3))

        def f(points):
            x, y = points[:, 0], points[:, 1]
            return np.stack([np.sin(3 * x), y**3, np.exp(x * y)], axis=1)

        projected = l2_project(space, f)
        b = load_vector(space, f).reshape(-1, 3)
        dense = np.linalg.solve(assemble_mass(space).toarray(), b)
        np.testing.assert_allclose(projected.nodal, dense, atol=1e-9)

    def test_galerkin_orthogonality(self, space_2d, random_field):
        def f(points):
            return np.stack([np.cos(points[:, 0]), points[:, 1] ** 2, points[:, 0] * points[:, 1]], axis=1)

        projected = l2_project(space_2d, f)
        residual = load_vector(space_2d, f) - space_2d.mass_blocks @ projected.coeffs
        for _ in range(5):
            chi = random_field(space_2d)
            assert abs(residual @ chi.coeffs) <= 1e-10 * np.linalg.norm(chi.coeffs)


class TestRitzProjection:
    """Tests for ritz_project."""

    def test_affine_is_interpolant(self, space):
        projected = ritz_project(space, _affine, _affine_gradient)
        np.testing.assert_allclose(projected.coeffs, interpolate_nodal(space, _affine).coeffs, atol=1e-11)

    def test_constant(self, space):
        projected = ritz_project(
            space,
            lambda p: np.tile([1.0, 2.0, -3.0], (p.shape[0], 1)),
            lambda p: np.zeros((p.shape[0], 3, p.shape[1])),
        )
        np.testing.assert_allclose(projected.nodal, np.tile([1.0, 2.0, -3.0], (space.n_nodes, 1)), atol=1e-12)

    def test_orthogonality_and_mean(self):
        """K c = <grad f, grad phi_i> and <R f, 1> = <f, 1>, with an independent high-degree rule."""
        space = FeSpace(build_structured_mesh(2, 4))
        projected = ritz_project(space, _quadratic, _quadratic_gradient)

        rule = collapsed_gauss_rule(2, 5)
        points = space.quadrature_points(rule)
        n_el, nq, _ = points.shape
        grad_values = _quadratic_gradient(points.reshape(-1, 2)).reshape(n_el, nq, 3, 2)
        local = np.einsum("eq,eqcd,eid->eic", space.element_weights(rule), grad_values, space.gradients)
        g = scatter_load(space, local).reshape(-1, 3)
        np.testing.assert_allclose(space.stiffness @ projected.nodal, g, atol=1e-11)

        values = _quadratic(points.reshape(-1, 2)).reshape(n_el, nq, 3)
        exact_means = np.einsum("eq,eqc->c", space.element_weights(rule), values)
        np.testing.assert_allclose(space.basis_integrals @ projected.nodal, exact_means, atol=1e-12)
        np.testing.assert_allclose(exact_means, [1.0 / 3.0, 0.25, 1.0 / 3.0 - 0.5], atol=1e-14)


class TestDiscreteLaplacian:
    """Tests for apply_discrete_laplacian."""

    def test_constant_is_zero(self, space):
        field = space.constant([1.0, -2.0, 0.5])
        out = apply_discrete_laplacian(space, space.mass, space.stiffness, field)
        np.testing.assert_allclose(out.coeffs, 0.0, atol=1e-11)

    def test_defining_identity(self, space_2d, random_field):
        for _ in range(20):
            v = random_field(space_2d)
            chi = random_field(space_2d)
            lap = apply_discrete_laplacian(space_2d, space_2d.mass, space_2d.stiffness, v)
            value = inner_mass(space_2d, lap, chi) + inner_stiffness(space_2d, v, chi)
            assert abs(value) <= 1e-10 * max(1.0, norm(space_2d, v, "H1") * norm(space_2d, chi, "H1"))

    def test_cosine_mode_converges(self):
        """Delta_h of the interpolant of cos(pi x) approaches -pi^2 cos(pi x)."""
        errors = []
        for n in (4, 8, 16):
            space = FeSpace(build_structured_mesh(2, n))
            zeros = np.zeros(space.n_nodes)
            cosine = np.cos(np.pi * space.mesh.nodes[:, 0])
            field = VectorField(space, np.column_stack([cosine, zeros, zeros]).ravel())
            exact = VectorField(space, np.column_stack([-np.pi**2 * cosine, zeros, zeros]).ravel())
            lap = apply_discrete_laplacian(space, space.mass, space.stiffness, field)
            errors.append(norm(space, lap - exact, "L2"))
        assert errors[2] < errors[1] < errors[0]


class TestNorms:
    """Tests for norm and mean."""

    def test_constant_unit(self, space):
        field = space.constant([1.0, 0.0, 0.0])
        assert norm(space, field, "L2") == pytest.approx(1.0, rel=1e-14)
        assert norm(space, field, "H1_semi") == pytest.approx(0.0, abs=1e-7)
        assert norm(space, field, "Linf") == 1.0
        assert norm(space, field, "L4") == pytest.approx(1.0, rel=1e-14)

    def test_linear_x(self, space):
        field = interpolate_nodal(space, lambda p: np.stack([p[:, 0], 0 * p[:, 0], 0 * p[:, 0]], axis=1))
        assert norm(space, field, "H1_semi") == pytest.approx(1.0, rel=1e-13)
        assert norm(space, field, "L2") == pytest.approx(0.5773502692, rel=1e-9)
        assert norm(space, field, "H1") == pytest.approx(np.sqrt(4.0 / 3.0), rel=1e-13)

    @pytest.mark.parametrize("kind", ["L2", "H1", "H1_semi", "Linf", "L4"])
    def test_zero(self, space, kind):
        assert norm(space, space.zero(), kind) == 0.0

    def test_mean(self, space):
        field = space.constant([2.0, 0.0, -1.0])
        np.testing.assert_allclose(mean(space, field), [2.0, 0.0, -1.0], atol=1e-14)


class TestVectorField:
    """Tests for VectorField arithmetic and checks."""

    def test_wrong_length(self, space_2d):
        with pytest.raises(MeshMismatchError):
            VectorField(space_2d, np.zeros(5))

    def test_mismatched_spaces(self, space_2d, space_1d):
        with pytest.raises(MeshMismatchError):
            _ = space_2d.zero() + space_1d.zero()

    def test_equal_meshes_combine(self):
        a = FeSpace(build_structured_mesh(2, 2)).constant([1.0, 0.0, 0.0])
        b = FeSpace(build_structured_mesh(2, 2)).constant([0.0, 1.0, 0.0])
        np.testing.assert_array_equal((a + b).nodal[0], [1.0, 1.0, 0.0])

    def test_arithmetic(self, space_2d, random_field):
        a = random_field(space_2d)
        b = random_field(space_2d)
        np.testing.assert_allclose((a + b - b).coeffs, a.coeffs, atol=1e-14)
        np.testing.assert_allclose((2.0 * a).coeffs, 2.0 * a.coeffs)


class TestProlong:
    """Tests for prolong."""

    @pytest.mark.parametrize("dim,n", [(1, 5), (2, 3)])
    def test_same_function(self, dim, n, rng):
        coarse_space = FeSpace(build_structured_mesh(dim, n))
        fine_space = FeSpace(refine_uniform(coarse_space.mesh))
        coarse = VectorField(coarse_space, rng.standard_normal(coarse_space.n_dofs))
        fine = prolong(coarse, fine_space)
        for kind in ("L2", "H1_semi", "H1", "Linf", "L4"):
            assert norm(fine_space, fine, kind) == pytest.approx(norm(coarse_space, coarse, kind), rel=1e-13)

    def test_coarse_values_exact(self, rng):
        coarse_space = FeSpace(build_structured_mesh(2, 3))
        fine_space = FeSpace(refine_uniform(coarse_space.mesh))
        coarse = VectorField(coarse_space, rng.standard_normal(coarse_space.n_dofs))
        fine = prolong(coarse, fine_space)
        idx = coarse_node_indices(coarse_space.mesh, fine_space.mesh)
        assert fine.nodal[idx].tobytes() == coarse.nodal.tobytes()

    def test_midpoints_average(self, rng):
        coarse_space = FeSpace(build_structured_mesh(2, 2))
        fine_space = FeSpace(refine_uniform(coarse_space.mesh))
        coarse = VectorField(coarse_space, rng.standard_normal(coarse_space.n_dofs))
        fine = prolong(coarse, fine_space)
        # fine node (1, 0) halves the edge 0-1, fine node (1, 1) halves the diagonal 0-4
        np.testing.assert_allclose(fine.nodal[1], 0.5 * (coarse.nodal[0] + coarse.nodal[1]), atol=1e-15)
        np.testing.assert_allclose(fine.nodal[6], 0.5 * (coarse.nodal[0] + coarse.nodal[4]), atol=1e-15)

    def test_not_nested(self):
        coarse = FeSpace(build_structured_mesh(2, 3)).zero()
        with pytest.raises(MeshMismatchError):
            prolong(coarse, FeSpace(build_structured_mesh(2, 5)))
