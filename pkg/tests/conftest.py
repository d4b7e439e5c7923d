"""Shared pytest fixtures for the test suite."""

from pathlib import Path
from tempfile import TemporaryDirectory

import numpy as np
import pytest
import structlog

from llbarfem.config import parse_config
from llbarfem.fem import FeSpace, VectorField
from llbarfem.mesh import build_structured_mesh
from llbarfem.models import ModelParams


@pytest.fixture
def temp_dir():
    """Create a temporary directory for test files."""
    with TemporaryDirectory() as tmpdir:
        yield Path(tmpdir)


@pytest.fixture
def temp_csv_file(temp_dir):
    """A CSV path that does not exist yet."""
    return temp_dir / "series.csv"


@pytest.fixture
def rng():
    """Seeded generator so random samples are reproducible."""
    return np.random.default_rng(20240617)


@pytest.fixture
def mesh_2d():
    return build_structured_mesh(2, 4)


@pytest.fixture
def space_2d(mesh_2d):
    return FeSpace(mesh_2d)


@pytest.fixture
def space_1d():
    return FeSpace(build_structured_mesh(1, 8))


@pytest.fixture(params=[1, 2], ids=["1d", "2d"])
def space(request):
    """A small space in each dimension."""
    return FeSpace(build_structured_mesh(request.param, 8 if request.param == 1 else 4))


@pytest.fixture
def random_field(rng):
    """Factory for random P1 fields with entries of the given scale."""

    def make(space: FeSpace, scale: float = 1.0) -> VectorField:
        return VectorField(space, scale * rng.standard_normal(space.n_dofs))

    return make


@pytest.fixture
def sim1_params():
    return ModelParams(lambda_e=1.0, lambda_r=4.0, gamma=10.0, kappa=2.0, mu=1.0, beta=-0.1, e_axis=(0, 0, 1))


@pytest.fixture
def sim2_params():
    return ModelParams(
        lambda_e=0.001, lambda_r=4.0, gamma=5.0, kappa=3.0, mu=-1.0, beta=0.2, e_axis=(0, 1, 0)
    )


@pytest.fixture
def sim1_config():
    """Simulation-1 physics on a coarse mesh with a short time window."""
    return parse_config("", ["preset=sim1", "divisions=4", "t_end=0.02", "dt=0.005"])


@pytest.fixture
def sim2_config():
    """Simulation-2 physics on a coarse mesh with a short time window."""
    return parse_config("", ["preset=sim2", "divisions=4", "t_end=0.02", "dt=0.005"])


@pytest.fixture
def config_file(temp_dir):
    """Write a configuration file and return its path."""

    def write(text: str) -> Path:
        path = temp_dir / "run.cfg"
        path.write_text(text)
        return path

    return write


@pytest.fixture(autouse=True)
def reset_logging():
    """Drop logging configuration bound to a per-test capture stream."""
    yield
    structlog.reset_defaults()
    structlog.contextvars.clear_contextvars()
