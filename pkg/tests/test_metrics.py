import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from zeno_sta.errors import InvalidDensityMatrix
from zeno_sta.metrics import (as_density, check_density, fidelity, pinch, pinching, purity, sqrtm_psd,
                              trace_distance, von_neumann_entropy)
from zeno_sta.operators import random_unitary
from zeno_sta.spectral import random_smooth_family


def random_density(rng, d, rank=None):
    rank = rank or d
    G = rng.normal(size=(d, rank)) + 1j * rng.normal(size=(d, rank))
    rho = G @ G.conj().T
    return rho / np.trace(rho).real


def test_pure_and_maximally_mixed():
    psi = np.array([0.6, 0.8j])
    assert purity(as_density(psi)) == pytest.approx(1.0)
    assert von_neumann_entropy(as_density(psi)) == pytest.approx(0.0, abs=1e-12)
    assert purity(np.eye(2) / 2) == pytest.approx(0.5)
    assert von_neumann_entropy(np.eye(2) / 2) == pytest.approx(np.log(2))


def test_identity_of_indiscernibles(rng):
    rho = random_density(rng, 4)
    assert fidelity(rho, rho) == pytest.approx(1.0, abs=1e-10)
    assert trace_distance(rho, rho) == 0.0


def test_fidelity_pure_states_mixed_inputs(rng):
    a = random_unitary(rng, 3)[:, 0]
    b = random_unitary(rng, 3)[:, 0]
    f = abs(np.vdot(a, b)) ** 2
    assert fidelity(a, b) == pytest.approx(f)
    assert fidelity(as_density(a), b) == pytest.approx(f)
    assert fidelity(as_density(a), as_density(b)) == pytest.approx(f, abs=1e-7)


def test_trace_distance_orthogonal_states():
    assert trace_distance(np.array([1, 0]), np.array([0, 1])) == pytest.approx(1.0)


def test_sqrtm_psd(rng):
    rho = random_density(rng, 5)
    s = sqrtm_psd(rho)
    assert np.allclose(s @ s, rho, atol=1e-12)


def test_check_density_errors():
    with pytest.raises(InvalidDensityMatrix):
        check_density(np.ones((2, 3)))
    with pytest.raises(InvalidDensityMatrix):
        check_density(np.array([[0.5, 1j], [0, 0.5]]))
    with pytest.raises(InvalidDensityMatrix):
        check_density(np.eye(2))
    with pytest.raises(InvalidDensityMatrix):
        check_density(np.diag([1.5, -0.5]))
    with pytest.raises(InvalidDensityMatrix):
        purity(np.diag([np.nan, 1.0]))


def test_pinching_plus_state_fully_dephases():
    plus = np.full((2, 2), 0.5)
    res = pinch(plus, [np.diag([1, 0]), np.diag([0, 1])])
    assert np.allclose(res.output, np.eye(2) / 2)
    assert res.purity_before == pytest.approx(1.0) and res.purity_after == pytest.approx(0.5)
    assert np.allclose(res.weights, [0.5, 0.5])


def test_pinching_block_diagonal_is_fixed(rng):
    rho = np.zeros((3, 3), dtype=complex)
    rho[:2, :2] = random_density(rng, 2) * 0.6
    rho[2, 2] = 0.4
    res = pinch(rho, [np.diag([1, 1, 0]), np.diag([0, 0, 1])])
    assert np.allclose(res.output, rho)
    assert res.purity_after == pytest.approx(res.purity_before)


@given(st.integers(2, 6), st.integers(0, 2**32 - 1))
def test_pinching_is_unital_and_mixing(d, seed):
    rng = np.random.default_rng(seed)
    fam = random_smooth_family(rng, d)
    Ps = fam(0.0)
    res = pinch(random_density(rng, d), Ps)
    assert res.purity_after <= res.purity_before + 1e-10
    assert res.entropy_after >= res.entropy_before - 1e-10
    assert np.allclose(pinching(np.eye(d), Ps), np.eye(d), atol=1e-12)


def test_incomplete_family_detected():
    with pytest.raises(InvalidDensityMatrix):
        pinch(np.eye(2) / 2, [np.diag([1, 0])])
