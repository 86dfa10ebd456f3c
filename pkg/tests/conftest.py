import numpy as np
import pytest

from mean_field_steady import FixedPointConfig, MomentumGrid, RadialGrid
from parsers.scenario_parser import parse_config
from phase_grid import PhaseGrid, make_potential


@pytest.fixture
def small_grid():
    return PhaseGrid(d=1, x_min=-8.0, x_max=8.0, p_max=6.0, n_x=32, n_p=48)


@pytest.fixture
def harmonic():
    return make_potential("harmonic", 1.0)


@pytest.fixture
def free():
    return make_potential("free")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def fixed_point_config():
    return FixedPointConfig(damping=0.5, tol=1e-11, max_iter=400,
                            grid=RadialGrid(8.0, 160), momentum=MomentumGrid(5.0, 80))


@pytest.fixture
def make_scenario(tmp_path):
    """Сценарий из текста с директорией результатов во временной папке."""
    def factory(text: str, kind: str = None):
        return parse_config(text, kind).with_overrides({"output.dir": str(tmp_path / "out")})
    return factory
