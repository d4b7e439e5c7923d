"""P1 Lagrange vector finite element space on a structured mesh.

Vector fields are stored node-major with the three components interleaved,
``coeffs[3 * node + c]``. Scalar forms (mass, stiffness) are N x N matrices
and act on each component independently.
"""

from collections.abc import Callable
from dataclasses import dataclass, field
from enum import StrEnum
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from llbarfem.errors import MeshMismatchError
from llbarfem.logging import get_logger
from llbarfem.mesh import Mesh, coarse_node_indices, is_refinement_of
from llbarfem.quadrature import QuadratureRule, high_rule, low_rule
from llbarfem.sparse import (
    SparseMatrix,
    block_diagonal_components,
    from_coo,
    solve_direct,
    solve_krylov,
)

logger = get_logger(__name__)

# f(points) -> values, points (P, dim), values (P, 3)
VectorFunction = Callable[[np.ndarray], np.ndarray]
# grad f(points) -> (P, 3, dim), row c is the gradient of component c
VectorGradient = Callable[[np.ndarray], np.ndarray]


class NormKind(StrEnum):
    L2 = "L2"
    H1 = "H1"
    H1_SEMI = "H1_semi"
    LINF = "Linf"
    L4 = "L4"


@dataclass(frozen=True, eq=False)
class FeSpace:
    """Continuous piecewise linear space V_h on ``mesh`` (three components)."""

    mesh: Mesh
    degree: int = 1
    low: QuadratureRule = field(init=False, repr=False)
    high: QuadratureRule = field(init=False, repr=False)

    def __post_init__(self) -> None:
        if self.degree != 1:
            raise NotImplementedError("only P1 elements are implemented")
        object.__setattr__(self, "low", low_rule(self.mesh.dim))
        object.__setattr__(self, "high", high_rule(self.mesh.dim))

    @property
    def n_nodes(self) -> int:
        return self.mesh.n_nodes

    @property
    def n_dofs(self) -> int:
        return 3 * self.mesh.n_nodes

    @cached_property
    def measures(self) -> np.ndarray:
        return self.mesh.measures()

    @cached_property
    def gradients(self) -> np.ndarray:
        """Constant gradients of the element basis functions, shape (E, dim+1, dim)."""
        inv = np.linalg.inv(self.mesh.jacobians())
        return np.concatenate([-inv.sum(axis=1, keepdims=True), inv], axis=1)

    @cached_property
    def mass(self) -> SparseMatrix:
        return assemble_mass(self)

    @cached_property
    def stiffness(self) -> SparseMatrix:
        return assemble_stiffness(self)

    @cached_property
    def mass_blocks(self) -> SparseMatrix:
        """Mass matrix lifted to the interleaved 3N layout (M ⊗ I3)."""
        return block_diagonal_components(self.mass)

    @cached_property
    def stiffness_blocks(self) -> SparseMatrix:
        return block_diagonal_components(self.stiffness)

    @cached_property
    def basis_integrals(self) -> np.ndarray:
        """m_i = <phi_i, 1>."""
        return np.asarray(self.mass.sum(axis=1)).ravel()

    @property
    def domain_measure(self) -> float:
        return float(self.measures.sum())

    def quadrature_points(self, rule: QuadratureRule) -> np.ndarray:
        """Physical quadrature points, shape (E, nq, dim)."""
        verts = self.mesh.nodes[self.mesh.elements]
        return np.einsum("qk,ekd->eqd", rule.points, verts)

    def element_weights(self, rule: QuadratureRule) -> np.ndarray:
        """Physical quadrature weights, shape (E, nq)."""
        return self.measures[:, None] * rule.weights[None, :]

    def zero(self) -> "VectorField":
        return VectorField(self, np.zeros(self.n_dofs))

    def constant(self, value: np.ndarray | list[float]) -> "VectorField":
        return VectorField(self, np.tile(np.asarray(value, dtype=float), self.n_nodes))


@dataclass(frozen=True, eq=False)
class VectorField:
    """Coefficients of an R^3-valued P1 function, node-major interleaved."""

    space: FeSpace
    coeffs: np.ndarray

    def __post_init__(self) -> None:
        coeffs = np.asarray(self.coeffs, dtype=float)
        if coeffs.shape != (self.space.n_dofs,):
            raise MeshMismatchError(
                f"field has {coeffs.shape} coefficients, space needs {self.space.n_dofs}"
            )
        object.__setattr__(self, "coeffs", coeffs)

    @property
    def nodal(self) -> np.ndarray:
        """Nodal values as an (N, 3) view of the coefficients."""
        return self.coeffs.reshape(-1, 3)

    def at(self, rule: QuadratureRule) -> np.ndarray:
        """Values at the quadrature points of every element, shape (E, nq, 3)."""
        local = self.nodal[self.space.mesh.elements]
        return np.einsum("qk,ekc->eqc", rule.points, local)

    def gradient(self) -> np.ndarray:
        """Elementwise constant gradient, shape (E, 3, dim)."""
        local = self.nodal[self.space.mesh.elements]
        return np.einsum("ekc,ekd->ecd", local, self.space.gradients)

    def __add__(self, other: "VectorField") -> "VectorField":
        _check_same_space(self, other)
        return VectorField(self.space, self.coeffs + other.coeffs)

    def __sub__(self, other: "VectorField") -> "VectorField":
        _check_same_space(self, other)
        return VectorField(self.space, self.coeffs - other.coeffs)

    def __mul__(self, scalar: float) -> "VectorField":
        return VectorField(self.space, scalar * self.coeffs)

    __rmul__ = __mul__


def _check_same_space(a: VectorField, b: VectorField) -> None:
    if a.space is not b.space and a.space.mesh != b.space.mesh:
        raise MeshMismatchError("fields live on different finite element spaces")


def scatter_matrix(space: FeSpace, local: np.ndarray) -> SparseMatrix:
    """Assemble element matrices (E, nb, nb) into the scalar N x N matrix."""
    elements = space.mesh.elements
    nb = elements.shape[1]
    rows = np.broadcast_to(elements[:, :, None], (elements.shape[0], nb, nb))
    cols = np.broadcast_to(elements[:, None, :], (elements.shape[0], nb, nb))
    return from_coo(space.n_nodes, space.n_nodes, rows, cols, local)


def scatter_block_matrix(space: FeSpace, local: np.ndarray) -> SparseMatrix:
    """Assemble element blocks (E, nb, 3, nb, 3) into the 3N x 3N matrix."""
    elements = space.mesh.elements
    n_el, nb = elements.shape
    dof = 3 * elements[:, :, None] + np.arange(3)[None, None, :]
    shape = (n_el, nb, 3, nb, 3)
    rows = np.broadcast_to(dof[:, :, :, None, None], shape)
    cols = np.broadcast_to(dof[:, None, None, :, :], shape)
    return from_coo(space.n_dofs, space.n_dofs, rows, cols, local)


def scatter_load(space: FeSpace, local: np.ndarray) -> np.ndarray:
    """Assemble element load vectors (E, nb, 3) into a 3N vector."""
    elements = space.mesh.elements
    dof = 3 * elements[:, :, None] + np.arange(3)[None, None, :]
    out = np.zeros(space.n_dofs)
    np.add.at(out, dof.ravel(), local.ravel())
    return out


def assemble_mass(space: FeSpace) -> SparseMatrix:
    """Scalar mass matrix M_ij = <phi_i, phi_j> (low rule, exact for P1)."""
    rule = space.low
    phi = rule.points
    local = np.einsum("e,q,qi,qj->eij", space.measures, rule.weights, phi, phi)
    mass = scatter_matrix(space, local)
    logger.debug("mass_assembled", nodes=space.n_nodes, nnz=mass.nnz)
    return mass


def assemble_stiffness(space: FeSpace) -> SparseMatrix:
    """Scalar stiffness matrix K_ij = <grad phi_i, grad phi_j>, no boundary conditions."""
    grads = space.gradients
    local = space.measures[:, None, None] * np.einsum("eid,ejd->eij", grads, grads)
    stiffness = scatter_matrix(space, local)
    logger.debug("stiffness_assembled", nodes=space.n_nodes, nnz=stiffness.nnz)
    return stiffness


def interpolate_nodal(space: FeSpace, f: VectorFunction) -> VectorField:
    """Nodal interpolant: coefficients are f evaluated at the mesh nodes."""
    values = np.asarray(f(space.mesh.nodes), dtype=float).reshape(space.n_nodes, 3)
    return VectorField(space, values.ravel())


def load_vector(space: FeSpace, f: VectorFunction, rule: QuadratureRule | None = None) -> np.ndarray:
    """b_{i,c} = <f_c, phi_i> by quadrature (high rule by default)."""
    rule = space.high if rule is None else rule
    points = space.quadrature_points(rule)
    n_el, nq, dim = points.shape
    values = np.asarray(f(points.reshape(-1, dim)), dtype=float).reshape(n_el, nq, 3)
    local = np.einsum("eq,qi,eqc->eic", space.element_weights(rule), rule.points, values)
    return scatter_load(space, local)


def integrate(space: FeSpace, f: VectorFunction, rule: QuadratureRule | None = None) -> np.ndarray:
    """Componentwise integral of f over the domain, shape (3,)."""
    rule = space.high if rule is None else rule
    points = space.quadrature_points(rule)
    n_el, nq, dim = points.shape
    values = np.asarray(f(points.reshape(-1, dim)), dtype=float).reshape(n_el, nq, 3)
    return np.einsum("eq,eqc->c", space.element_weights(rule), values)


def _solve_mass(space: FeSpace, rhs: np.ndarray, tol: float, maxit: int) -> np.ndarray:
    rhs = rhs.reshape(-1, 3)
    out = np.empty_like(rhs)
    for c in range(3):
        out[:, c] = solve_krylov(space.mass, rhs[:, c], tol=tol, maxit=maxit)
    return out.ravel()


def l2_project(space: FeSpace, f: VectorFunction, tol: float = 1e-12, maxit: int = 1000) -> VectorField:
    """L2 projection Pi_h f: <Pi_h f - f, chi> = 0 for every chi in V_h.

    Raises:
        LinearSolverError: The mass solve did not converge
    """
    coeffs = _solve_mass(space, load_vector(space, f), tol, maxit)
    return VectorField(space, coeffs)


def ritz_project(space: FeSpace, f: VectorFunction, gradient: VectorGradient) -> VectorField:
    """Ritz projection R_h f with the mean constraint <R_h f - f, 1> = 0.

    Each component solves the augmented Neumann system
    [[K, m], [m^T, 0]] [c; lambda] = [g; <f_c, 1>] with m_i = <phi_i, 1>.

    Raises:
        LinearSolverError: The augmented system could not be factorised
    """
    rule = space.high
    points = space.quadrature_points(rule)
    n_el, nq, dim = points.shape
    grad_values = np.asarray(gradient(points.reshape(-1, dim)), dtype=float).reshape(n_el, nq, 3, dim)
    # <grad f_c, grad phi_i> with grad phi_i constant per element
    local = np.einsum("eq,eqcd,eid->eic", space.element_weights(rule), grad_values, space.gradients)
    g = scatter_load(space, local).reshape(-1, 3)
    means = integrate(space, f, rule)

    m = space.basis_integrals.reshape(-1, 1)
    augmented = sp.csr_matrix(
        sp.bmat([[space.stiffness, sp.csr_matrix(m)], [sp.csr_matrix(m.T), None]], format="csr")
    )
    out = np.empty((space.n_nodes, 3))
    for c in range(3):
        rhs = np.concatenate([g[:, c], [means[c]]])
        out[:, c] = solve_direct(augmented, rhs)[:-1]
    return VectorField(space, out.ravel())


def apply_discrete_laplacian(
    space: FeSpace,
    mass: SparseMatrix,
    stiffness: SparseMatrix,
    v: VectorField,
    tol: float = 1e-12,
    maxit: int = 1000,
) -> VectorField:
    """Discrete Laplacian: <Delta_h v, chi> = -<grad v, grad chi>, i.e. M w = -K v."""
    rhs = -(stiffness @ v.nodal)
    out = np.empty_like(rhs)
    for c in range(3):
        out[:, c] = solve_krylov(mass, rhs[:, c], tol=tol, maxit=maxit)
    return VectorField(space, out.ravel())


def inner_mass(space: FeSpace, a: VectorField, b: VectorField) -> float:
    """<a, b> in L2."""
    return float(np.sum(a.nodal * (space.mass @ b.nodal)))


def inner_stiffness(space: FeSpace, a: VectorField, b: VectorField) -> float:
    """<grad a, grad b> in L2."""
    return float(np.sum(a.nodal * (space.stiffness @ b.nodal)))


def norm(space: FeSpace, v: VectorField, kind: NormKind | str = NormKind.L2) -> float:
    """Norm of a field: L2, H1, H1 seminorm, L4 (quadrature) or nodal max (Linf)."""
    kind = NormKind(kind)
    if kind is NormKind.LINF:
        return float(np.max(np.linalg.norm(v.nodal, axis=1))) if v.nodal.size else 0.0
    if kind is NormKind.L4:
        values = v.at(space.high)
        fourth = np.einsum("eq,eq->", space.element_weights(space.high), np.sum(values**2, axis=2) ** 2)
        return float(max(fourth, 0.0) ** 0.25)
    l2_sq = max(inner_mass(space, v, v), 0.0)
    if kind is NormKind.L2:
        return float(np.sqrt(l2_sq))
    semi_sq = max(inner_stiffness(space, v, v), 0.0)
    if kind is NormKind.H1_SEMI:
        return float(np.sqrt(semi_sq))
    return float(np.sqrt(l2_sq + semi_sq))


def mean(space: FeSpace, v: VectorField) -> np.ndarray:
    """Componentwise mean value over the domain, shape (3,)."""
    return (space.basis_integrals @ v.nodal) / space.domain_measure


def prolong(coarse: VectorField, fine_space: FeSpace) -> VectorField:
    """Represent a coarse P1 field on the uniformly refined space.

    Coarse nodes keep their values; every new node is the midpoint of a
    coarse edge (in 2D including the cell diagonal) and receives the average
    of the two endpoint values.

    Raises:
        MeshMismatchError: The fine mesh is not the refinement of the coarse one
    """
    coarse_mesh = coarse.space.mesh
    fine_mesh = fine_space.mesh
    if not is_refinement_of(fine_mesh, coarse_mesh):
        raise MeshMismatchError(
            f"cannot prolong from {coarse_mesh.divisions} to {fine_mesh.divisions} divisions"
        )
    n = coarse_mesh.divisions
    fine_idx = np.arange(2 * n + 1)
    lo, hi = fine_idx // 2, (fine_idx + 1) // 2
    values = coarse.nodal
    if coarse_mesh.dim == 1:
        out = 0.5 * (values[lo] + values[hi])
    else:
        # fine node (I, J) sits between coarse (I//2, J//2) and (ceil(I/2), ceil(J/2))
        lo_i, lo_j = np.meshgrid(lo, lo, indexing="xy")
        hi_i, hi_j = np.meshgrid(hi, hi, indexing="xy")
        first = (lo_j * (n + 1) + lo_i).ravel()
        second = (hi_j * (n + 1) + hi_i).ravel()
        out = 0.5 * (values[first] + values[second])
    result = out.copy()
    # coarse values carried over bit for bit
    result[coarse_node_indices(coarse_mesh, fine_mesh)] = values
    return VectorField(fine_space, result.ravel())
