import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from zeno_sta.errors import DimMismatch, MissingParam, NonFiniteInput, UnknownModel
from zeno_sta.operators import (IDENTITY_2, SIGMA_X, SIGMA_Y, SIGMA_Z, ModelSpec, TimeGrid, commutator,
                                constant_schedule, is_hermitian, matrix_exponential, model_hamiltonian,
                                opnorm, random_hermitian, spin1_matrices, unitary_steps)

MODELS = [
    ModelSpec("rotating-qubit", {"omega": 1.3, "T": 2.0}),
    ModelSpec("landau-zener", {"v": 2.0, "Delta": 1.0, "T": 10.0}),
    ModelSpec("three-level", {"omega": 1.0, "T": 1.0}),
    ModelSpec("tfim", {"L": 3, "J": 1.0, "h_start": 2.0, "h_end": 0.5, "T": 3.0}),
    ModelSpec("tfim", {"L": 2, "J": 0.7, "h_start": 0.1, "h_end": 1.5, "T": 1.0, "g": 0.2, "shape": "sin2"}),
]


def test_exponential_of_zero_is_identity():
    assert np.allclose(matrix_exponential(np.zeros((4, 4)), -0.1j), np.eye(4), atol=1e-15)


def test_exponential_diagonal_case():
    U = matrix_exponential(SIGMA_Z, -1j * np.pi / 2)
    assert np.allclose(U, np.diag([np.exp(-1j * np.pi / 2), np.exp(1j * np.pi / 2)]), atol=1e-15)


def _series_exp(A, terms=60):
    out = np.eye(A.shape[0], dtype=complex)
    term = np.eye(A.shape[0], dtype=complex)
    for k in range(1, terms):
        term = term @ A / k
        out = out + term
    return out


def test_exponential_sigma_x_against_power_series():
    theta = 0.3
    U = matrix_exponential(SIGMA_X, -1j * theta)
    closed = math.cos(theta) * IDENTITY_2 - 1j * math.sin(theta) * SIGMA_X
    assert opnorm(U - closed) < 1e-15
    assert opnorm(U - _series_exp(-1j * theta * SIGMA_X)) < 1e-15


def test_non_hermitian_exponential_against_power_series(rng):
    A = rng.normal(size=(5, 5)) + 1j * rng.normal(size=(5, 5))
    A /= opnorm(A)
    E = matrix_exponential(A, 0.7)
    ref = _series_exp(0.7 * A)
    assert opnorm(E - ref) <= 1e-13 * opnorm(ref)


def test_exponential_rejects_non_finite():
    A = np.eye(2)
    A[0, 1] = np.nan
    with pytest.raises(NonFiniteInput):
        matrix_exponential(A, -1j)
    with pytest.raises(DimMismatch):
        matrix_exponential(np.ones((2, 3)), 1.0)


def test_exponential_broadcasts_over_stacks(rng):
    Hs = np.array([random_hermitian(rng, 3) for _ in range(4)])
    stacked = unitary_steps(Hs, 0.2)
    for H, U in zip(Hs, stacked):
        assert opnorm(U - matrix_exponential(H, -0.2j)) < 1e-14


@given(st.integers(2, 8), st.floats(0.01, 20.0), st.integers(0, 2**32 - 1))
def test_step_unitary_is_unitary(d, dt, seed):
    H = random_hermitian(np.random.default_rng(seed), d, scale=3.0)
    U = matrix_exponential(H, -1j * dt)
    assert opnorm(U.conj().T @ U - np.eye(d)) <= 1e-12


def test_pauli_commutator():
    assert np.allclose(commutator(SIGMA_X, SIGMA_Y), 2j * SIGMA_Z)


def test_commutator_with_itself_vanishes(rng):
    A = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    assert np.array_equal(commutator(A, A), np.zeros((4, 4)))


def test_commutator_pattern():
    C = commutator(np.diag([1.0, 2.0]), SIGMA_X)
    assert np.allclose(C, [[0, -1], [1, 0]])
    with pytest.raises(DimMismatch):
        commutator(np.eye(2), np.eye(3))


def test_grid_endpoint_is_exact():
    g = TimeGrid(0.7, 3)
    assert g.times[-1] == 0.7
    assert g.times[0] == 0.0
    assert np.allclose(np.diff(g.times), g.dt)
    assert np.allclose(g.midpoints, g.times[:-1] + g.dt / 2)
    assert g.refine(10).N == 30
    with pytest.raises(ValueError):
        TimeGrid(1.0, 0)
    with pytest.raises(ValueError):
        TimeGrid(-1.0, 5)


def test_rotating_qubit_endpoints():
    H = model_hamiltonian(ModelSpec("rotating-qubit", {"omega": 1.0, "T": 1.0}))
    assert np.allclose(H(0.0), 0.5 * SIGMA_Z, atol=1e-15)
    assert np.allclose(H(1.0), 0.5 * SIGMA_X, atol=1e-15)


def test_landau_zener_at_crossing():
    H = model_hamiltonian(ModelSpec("landau-zener", {"v": 2.0, "Delta": 1.0, "T": 10.0}))
    assert np.allclose(H(5.0), 0.5 * SIGMA_X, atol=1e-15)


def test_three_level_spectrum_is_static():
    H = model_hamiltonian(ModelSpec("three-level", {"omega": 1.0, "T": 1.0, "alpha": 0.25}))
    for t in (0.0, 0.3, 1.0):
        assert np.allclose(np.linalg.eigvalsh(H(t)), [-0.75, 0.0, 1.25], atol=1e-13)
    jx, jy, jz = spin1_matrices()
    assert np.allclose(commutator(jx, jy), 1j * jz)


def test_tfim_dimension_and_limits():
    H = model_hamiltonian(ModelSpec("tfim", {"L": 3, "J": 1.0, "h_start": 0.0, "h_end": 1.0, "T": 1.0}))
    assert H.dim == 8
    # h = 0: classical Ising chain, ground energy -(L-1) J
    assert np.isclose(np.linalg.eigvalsh(H(0.0))[0], -2.0)
    with pytest.raises(ValueError):
        model_hamiltonian(ModelSpec("tfim", {"L": 7, "J": 1.0, "h_start": 0.0, "h_end": 1.0, "T": 1.0}))


def test_model_errors():
    with pytest.raises(UnknownModel):
        model_hamiltonian(ModelSpec("heisenberg", {}))
    with pytest.raises(MissingParam):
        model_hamiltonian(ModelSpec("landau-zener", {"v": 1.0, "T": 1.0}))


@pytest.mark.parametrize("spec", MODELS, ids=lambda s: s.name)
def test_models_are_hermitian_with_matching_derivatives(spec):
    H = model_hamiltonian(spec)
    ts = np.linspace(0.05, 0.95, 7) * H.T
    h = 1e-5
    for t in ts:
        assert is_hermitian(H(t))
        fd = (H(t + h) - H(t - h)) / (2 * h)
        assert opnorm(H.dot(t) - fd) <= 1e-6 * max(opnorm(fd), 1.0)


def test_schedule_broadcasts_over_time_arrays():
    H = model_hamiltonian(MODELS[0])
    t = np.linspace(0, 2, 5)
    stack = H(t)
    assert stack.shape == (5, 2, 2)
    assert np.allclose(stack[3], H(t[3]))


def test_constant_schedule():
    S = constant_schedule(SIGMA_X, T=2.0)
    assert S(np.array([0.0, 1.0])).shape == (2, 2, 2)
    assert np.allclose(S.dot(0.5), 0)
