"""Structured simplicial meshes of the unit interval and the unit square."""

from dataclasses import dataclass, field
from math import factorial

import numpy as np

from llbarfem.errors import InvalidValueError, MeshMismatchError
from llbarfem.logging import get_logger

logger = get_logger(__name__)


@dataclass(frozen=True, eq=False)
class Mesh:
    """Uniform triangulation of [0,1]^dim.

    Nodes are numbered lexicographically with x fastest; in 2D each square
    cell is split by the diagonal from its lower-left to its upper-right
    corner, giving two positively oriented triangles per cell.
    """

    dim: int
    divisions: int
    nodes: np.ndarray = field(repr=False)
    elements: np.ndarray = field(repr=False)

    @property
    def n_nodes(self) -> int:
        return self.nodes.shape[0]

    @property
    def n_elements(self) -> int:
        return self.elements.shape[0]

    @property
    def h(self) -> float:
        return mesh_size(self)

    def jacobians(self) -> np.ndarray:
        """Edge matrices J_e = [v1 - v0, ..., vd - v0] per element, shape (E, d, d)."""
        verts = self.nodes[self.elements]
        return np.swapaxes(verts[:, 1:, :] - verts[:, :1, :], 1, 2)

    def signed_measures(self) -> np.ndarray:
        """Signed element areas (2D) or lengths (1D)."""
        return np.linalg.det(self.jacobians()) / factorial(self.dim)

    def measures(self) -> np.ndarray:
        return np.abs(self.signed_measures())

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Mesh):
            return NotImplemented
        return (
            self.dim == other.dim
            and self.divisions == other.divisions
            and np.array_equal(self.nodes, other.nodes)
            and np.array_equal(self.elements, other.elements)
        )

    def __hash__(self) -> int:
        return hash((self.dim, self.divisions))


def build_structured_mesh(dim: int, n: int) -> Mesh:
    """Build the uniform mesh of the unit interval (dim=1) or square (dim=2).

    Args:
        dim: Spatial dimension, 1 or 2
        n: Number of cells per axis

    Returns:
        Mesh with (n+1)^dim nodes and n (1D) or 2n^2 (2D) elements

    Raises:
        InvalidValueError: dim not in {1, 2} or n < 1
    """
    if dim not in (1, 2):
        raise InvalidValueError(f"mesh dimension must be 1 or 2, got {dim}", key="dim")
    if n < 1:
        raise InvalidValueError(f"mesh divisions must be >= 1, got {n}", key="divisions")

    coords = np.arange(n + 1) / n
    if dim == 1:
        nodes = coords.reshape(-1, 1)
        left = np.arange(n)
        elements = np.column_stack([left, left + 1])
    else:
        xx, yy = np.meshgrid(coords, coords, indexing="xy")
        nodes = np.column_stack([xx.ravel(), yy.ravel()])
        i, j = np.meshgrid(np.arange(n), np.arange(n), indexing="xy")
        n00 = (j * (n + 1) + i).ravel()
        n10 = n00 + 1
        n01 = n00 + (n + 1)
        n11 = n01 + 1
        lower = np.column_stack([n00, n10, n11])
        upper = np.column_stack([n00, n11, n01])
        elements = np.stack([lower, upper], axis=1).reshape(-1, 3)

    elements = elements.astype(np.int64)
    nodes.setflags(write=False)
    elements.setflags(write=False)
    mesh = Mesh(dim=dim, divisions=n, nodes=nodes, elements=elements)
    logger.debug("mesh_built", dim=dim, divisions=n, nodes=mesh.n_nodes, elements=mesh.n_elements)
    return mesh


def refine_uniform(mesh: Mesh) -> Mesh:
    """Return the nested mesh with twice as many divisions per axis."""
    return build_structured_mesh(mesh.dim, 2 * mesh.divisions)


def mesh_size(mesh: Mesh) -> float:
    """Maximal element diameter h (longest edge of any element)."""
    verts = mesh.nodes[mesh.elements]
    nv = verts.shape[1]
    longest = np.zeros(mesh.n_elements)
    for a in range(nv):
        for b in range(a + 1, nv):
            longest = np.maximum(longest, np.linalg.norm(verts[:, a] - verts[:, b], axis=1))
    return float(longest.max())


def coarse_node_indices(coarse: Mesh, fine: Mesh) -> np.ndarray:
    """Fine-mesh index of every coarse node, for meshes related by refine_uniform."""
    if not is_refinement_of(fine, coarse):
        raise MeshMismatchError(
            f"mesh with {fine.divisions} divisions is not the uniform refinement of "
            f"mesh with {coarse.divisions} divisions"
        )
    n = coarse.divisions
    if coarse.dim == 1:
        return 2 * np.arange(n + 1)
    i, j = np.meshgrid(np.arange(n + 1), np.arange(n + 1), indexing="xy")
    return (2 * j * (2 * n + 1) + 2 * i).ravel()


def is_refinement_of(fine: Mesh, coarse: Mesh) -> bool:
    return fine.dim == coarse.dim and fine.divisions == 2 * coarse.divisions
