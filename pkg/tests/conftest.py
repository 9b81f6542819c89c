import numpy as np
import pytest
from hypothesis import settings

from zeno_sta.operators import ModelSpec, TimeGrid, model_hamiltonian
from zeno_sta.spectral import instantaneous_frame, spectral_projectors

settings.register_profile("ci", max_examples=40, deadline=None)
settings.load_profile("ci")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def qubit():
    """Rotating qubit (omega = 1, T = 1) with its spectral family on a 1000-step grid."""
    H = model_hamiltonian(ModelSpec("rotating-qubit", {"omega": 1.0, "T": 1.0}))
    grid = TimeGrid(1.0, 1000)
    frame = instantaneous_frame(H, grid)
    return H, grid, frame, spectral_projectors(frame)


@pytest.fixture(scope="session")
def lz():
    H = model_hamiltonian(ModelSpec("landau-zener", {"v": 2.0, "Delta": 1.0, "T": 10.0}))
    grid = TimeGrid(10.0, 200)
    frame = instantaneous_frame(H, grid)
    return H, grid, frame, spectral_projectors(frame)


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance") or __import__("sys").modules.get("tests.test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.summary_lines():
        terminalreporter.write_line(line)
