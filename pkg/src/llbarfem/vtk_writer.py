"""Legacy ASCII VTK snapshots of the spin field u and the effective field H."""

from pathlib import Path

import numpy as np

from llbarfem.errors import InvalidValueError, OutputError
from llbarfem.fem import FeSpace, VectorField
from llbarfem.logging import get_logger

logger = get_logger(__name__)

VTK_TRIANGLE = 5


def _rows(values: np.ndarray) -> list[str]:
    return [" ".join(f"{v:.17g}" for v in row) for row in values]


def snapshot_lines(space: FeSpace, u: VectorField, h: VectorField, time: float) -> list[str]:
    """Lines of an UNSTRUCTURED_GRID file with point vectors ``u`` and ``H``."""
    mesh = space.mesh
    if mesh.dim != 2:
        raise InvalidValueError(f"VTK snapshots need a 2D mesh, got dim={mesh.dim}", key="dim")
    if u.space is not space or h.space is not space:
        raise ValueError("u and H must live on the snapshot space")

    points = np.column_stack([mesh.nodes, np.zeros(mesh.n_nodes)])
    cells = [f"3 {a} {b} {c}" for a, b, c in mesh.elements]

    lines = [
        "# vtk DataFile Version 3.0",
        f"llbarfem snapshot t={time:.17g}",
        "ASCII",
        "DATASET UNSTRUCTURED_GRID",
        "FIELD FieldData 1",
        "TIME 1 1 double",
        f"{time:.17g}",
        f"POINTS {mesh.n_nodes} double",
        *_rows(points),
        f"CELLS {mesh.n_elements} {4 * mesh.n_elements}",
        *cells,
        f"CELL_TYPES {mesh.n_elements}",
        *([str(VTK_TRIANGLE)] * mesh.n_elements),
        f"POINT_DATA {mesh.n_nodes}",
        "VECTORS u double",
        *_rows(u.nodal),
        "VECTORS H double",
        *_rows(h.nodal),
    ]
    return lines


def write_snapshot_vtk(space: FeSpace, u: VectorField, h: VectorField, time: float, path: str | Path) -> None:
    """Write one snapshot file.

    Raises:
        InvalidValueError: The mesh is not two-dimensional
        OutputError: The file cannot be written
    """
    path = Path(path)
    text = "\n".join(snapshot_lines(space, u, h, time)) + "\n"
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
    except OSError as e:
        logger.error("vtk_write_failed", path=str(path), error=str(e))
        raise OutputError(f"cannot write VTK snapshot ({e.strerror or e})", str(path)) from e
    logger.debug("vtk_written", path=str(path), time=time)
