"""LLBar/LLBloch physics: energy, nonlinear loads and their Jacobians.

Every integrand below is a polynomial of degree at most four in the P1
coefficients, so the degree-4 rule of the space integrates it exactly and
the discrete energy identities hold to roundoff.
"""

from enum import StrEnum

import numpy as np

from llbarfem.fem import FeSpace, VectorField, scatter_block_matrix, scatter_load
from llbarfem.logging import get_logger
from llbarfem.models import ModelParams
from llbarfem.sparse import SparseMatrix, block_diagonal_components, solve_direct

logger = get_logger(__name__)


class EnergyBranch(StrEnum):
    """Normalisation of the energy functional.

    ``double_well`` uses kappa/4 || |u|^2 - mu ||^2; ``origin`` uses
    kappa/4 ||u||_L4^4 - kappa mu / 2 ||u||^2 so that E(0) = 0. The two
    differ by the constant kappa mu^2 |D| / 4.
    """

    AUTO = "auto"
    DOUBLE_WELL = "double_well"
    ORIGIN = "origin"


def _load(space: FeSpace, values: np.ndarray) -> np.ndarray:
    """b_{i,c} = sum_q w_q phi_i(q) values[e, q, c] with the high rule."""
    rule = space.high
    local = np.einsum("eq,qi,eqc->eic", space.element_weights(rule), rule.points, values)
    return scatter_load(space, local)


def _block_matrix(space: FeSpace, blocks: np.ndarray) -> SparseMatrix:
    """Matrix of the form <B(x) y, phi_i e_c> for pointwise 3x3 blocks (E, nq, 3, 3)."""
    rule = space.high
    phi = rule.points
    local = np.einsum("eq,qi,qj,eqcd->eicjd", space.element_weights(rule), phi, phi, blocks)
    return scatter_block_matrix(space, local)


def _skew(w: np.ndarray) -> np.ndarray:
    """Cross-product matrices [w]_x with [w]_x y = w x y, for w of shape (..., 3)."""
    out = np.zeros(w.shape + (3,))
    out[..., 0, 1] = -w[..., 2]
    out[..., 0, 2] = w[..., 1]
    out[..., 1, 0] = w[..., 2]
    out[..., 1, 2] = -w[..., 0]
    out[..., 2, 0] = -w[..., 1]
    out[..., 2, 1] = w[..., 0]
    return out


def energy_components(
    space: FeSpace, p: ModelParams, u: VectorField, branch: EnergyBranch | str = EnergyBranch.AUTO
) -> dict[str, float]:
    """Exchange, internal-exchange and anisotropy parts of the energy."""
    branch = EnergyBranch(branch)
    if branch is EnergyBranch.AUTO:
        branch = EnergyBranch.DOUBLE_WELL if p.mu > 0 else EnergyBranch.ORIGIN

    exchange = 0.5 * float(np.sum(u.nodal * (space.stiffness @ u.nodal)))

    weights = space.element_weights(space.high)
    sq = np.sum(u.at(space.high) ** 2, axis=2)
    if branch is EnergyBranch.DOUBLE_WELL:
        internal = 0.25 * p.kappa * float(np.sum(weights * (sq - p.mu) ** 2))
    else:
        l2_sq = float(np.sum(u.nodal * (space.mass @ u.nodal)))
        internal = 0.25 * p.kappa * float(np.sum(weights * sq**2)) - 0.5 * p.kappa * p.mu * l2_sq

    projected = u.nodal @ p.e
    anisotropy = 0.5 * p.beta * float(projected @ (space.mass @ projected))

    return {
        "exchange": exchange,
        "internal": internal,
        "anisotropy": anisotropy,
        "total": exchange + internal + anisotropy,
    }


def energy(
    space: FeSpace, p: ModelParams, u: VectorField, branch: EnergyBranch | str = EnergyBranch.AUTO
) -> float:
    """Energy E(u); the branch follows sign(mu) unless forced (mu = 0 uses ``origin``)."""
    return energy_components(space, p, u, branch)["total"]


def cubic_load(space: FeSpace, u: VectorField) -> np.ndarray:
    """b_{i,c} = <|u|^2 u, phi_i e_c>."""
    values = u.at(space.high)
    return _load(space, np.sum(values**2, axis=2, keepdims=True) * values)


def cubic_jacobian(space: FeSpace, u: VectorField) -> SparseMatrix:
    """Derivative of cubic_load: pointwise block |u|^2 I + 2 u u^T (symmetric)."""
    values = u.at(space.high)
    sq = np.sum(values**2, axis=2)
    blocks = sq[..., None, None] * np.eye(3) + 2.0 * values[..., :, None] * values[..., None, :]
    return _block_matrix(space, blocks)


def cross_matrix(space: FeSpace, w: VectorField) -> SparseMatrix:
    """C(w) with (C(w) Y)_{i,c} = <w x y, phi_i e_c> for the field y with coefficients Y."""
    return _block_matrix(space, _skew(w.at(space.high)))


def anisotropy_matrix(p: ModelParams, mass: SparseMatrix) -> SparseMatrix:
    """M ⊗ e e^T in the interleaved layout."""
    return block_diagonal_components(mass, np.outer(p.e, p.e))


def anisotropy_apply(p: ModelParams, mass: SparseMatrix, u: np.ndarray) -> np.ndarray:
    """b_{i,c} = e_c sum_d e_d (M u_d)_i, i.e. <e (e . u), phi_i e_c>."""
    nodal = np.asarray(u, dtype=float).reshape(-1, 3)
    projected = mass @ (nodal @ p.e)
    return np.outer(projected, p.e).ravel()


def psi_load(space: FeSpace, u_n: VectorField, u_np1: VectorField) -> np.ndarray:
    """b_{i,c} = <psi(u^n, u^{n+1}), phi_i e_c>, psi = (|u^{n+1}|^2 + |u^n|^2)/2 u^{n+1/2}."""
    a = u_n.at(space.high)
    b = u_np1.at(space.high)
    s = np.sum(a**2, axis=2, keepdims=True) + np.sum(b**2, axis=2, keepdims=True)
    return _load(space, 0.25 * s * (a + b))


def psi_jacobian(space: FeSpace, u_n: VectorField, u_np1: VectorField) -> SparseMatrix:
    """Derivative of psi_load in u^{n+1}: block (|a|^2 + |b|^2)/4 I + u^{n+1/2} b^T."""
    a = u_n.at(space.high)
    b = u_np1.at(space.high)
    s = np.sum(a**2, axis=2) + np.sum(b**2, axis=2)
    mid = 0.5 * (a + b)
    blocks = 0.25 * s[..., None, None] * np.eye(3) + mid[..., :, None] * b[..., None, :]
    return _block_matrix(space, blocks)


def effective_field(space: FeSpace, p: ModelParams, u: VectorField) -> VectorField:
    """Discrete H(u): M H = -K u + kappa mu M u - kappa |u|^2 u - beta e (e . u)."""
    rhs = (
        -(space.stiffness_blocks @ u.coeffs)
        + p.kappa * p.mu * (space.mass_blocks @ u.coeffs)
        - p.kappa * cubic_load(space, u)
        - p.beta * anisotropy_apply(p, space.mass, u.coeffs)
    )
    nodal = rhs.reshape(-1, 3)
    out = np.empty_like(nodal)
    for c in range(3):
        out[:, c] = solve_direct(space.mass, nodal[:, c])
    return VectorField(space, out.ravel())
