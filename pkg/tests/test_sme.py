import numpy as np
import pytest
from scipy.stats import linregress

from zeno_sta.errors import GridMismatch, PositivityLoss, StabilityGuard
from zeno_sta.generators import evolve_intertwiner
from zeno_sta.metrics import purity, trace_distance
from zeno_sta.operators import SIGMA_X, SIGMA_Z, TimeGrid, constant_schedule, matrix_exponential, opnorm
from zeno_sta.oracle import reference_states
from zeno_sta.sme import (MonitoredObservable, comoving_transform, dissipator, innovation, lindblad_evolve,
                          off_block_norm, sme_ensemble, sme_step, sme_trajectory, transformed_hamiltonian,
                          wiener_increments)
from zeno_sta.spectral import constant_family

ZBASIS = [np.diag([1.0, 0.0]), np.diag([0.0, 1.0])]
PLUS = np.full((2, 2), 0.5, dtype=complex)


def sigma_z_monitor(kappa, T=1.0):
    return MonitoredObservable(constant_family(ZBASIS, T=T), kappa, x=(1.0, -1.0))


def test_observable_construction():
    obs = sigma_z_monitor(1.0)
    assert np.allclose(obs.X(0.3), SIGMA_Z)
    assert obs.min_separation == 2.0
    with pytest.raises(ValueError):
        MonitoredObservable(constant_family(ZBASIS), -1.0)
    with pytest.raises(ValueError):
        MonitoredObservable(constant_family(ZBASIS), 1.0, x=(1.0,))


def test_innovation_is_hermitian_and_traceless(rng):
    G = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    rho = G @ G.conj().T
    rho /= np.trace(rho).real
    X = np.diag([0.0, 1.0, 2.0]) + 0.3 * (np.eye(3, k=1) + np.eye(3, k=-1))
    I = innovation(X, rho)
    assert np.allclose(I, I.conj().T)
    assert abs(np.trace(I)) < 1e-14
    assert abs(np.trace(dissipator(X, rho))) < 1e-14


@pytest.mark.parametrize("scheme", ["kraus", "euler"])
def test_zero_kappa_step_is_unitary(scheme):
    rho = np.array([[0.7, 0.2j], [-0.2j, 0.3]])
    U = matrix_exponential(SIGMA_X, -1j * 1e-3)
    out = sme_step(rho, SIGMA_X, SIGMA_Z, 0.0, 1e-3, 0.01, scheme=scheme)
    assert np.allclose(out, U @ rho @ U.conj().T, atol=1e-6)


@pytest.mark.parametrize("scheme,steps", [("kraus", 200), ("euler", 20)])
def test_step_preserves_trace(scheme, steps):
    rng = np.random.default_rng(3)
    rho = 0.6 * PLUS + 0.2 * np.eye(2)
    for _ in range(steps):
        rho = sme_step(rho, 0.3 * SIGMA_X, SIGMA_Z, 0.5, 1e-3, rng.normal() * np.sqrt(1e-3), scheme=scheme)
        assert abs(np.trace(rho) - 1) <= 1e-10
        assert np.allclose(rho, rho.conj().T)


def test_zero_kappa_trajectory_is_deterministic():
    H = constant_schedule(SIGMA_X)
    grid = TimeGrid(1.0, 100)
    a = sme_trajectory(H, sigma_z_monitor(0.0), grid, PLUS, seed=1)
    b = sme_trajectory(H, sigma_z_monitor(0.0), grid, PLUS, seed=2)
    assert np.allclose(a.states[-1], b.states[-1], atol=1e-12)
    assert np.array_equal(a.dY, a.dW)


def test_record_determinism():
    H = constant_schedule(0.5 * SIGMA_X)
    grid = TimeGrid(1.0, 200)
    obs = sigma_z_monitor(3.0)
    a = sme_trajectory(H, obs, grid, PLUS, seed=11)
    b = sme_trajectory(H, obs, grid, PLUS, seed=11)
    c = sme_trajectory(H, obs, grid, PLUS, seed=12)
    assert np.array_equal(a.dY, b.dY) and np.array_equal(a.states, b.states)
    assert not np.allclose(a.dY, c.dY)
    assert np.all(np.abs(np.trace(a.states, axis1=1, axis2=2) - 1) < 1e-10)


def test_ensemble_member_reproduces_trajectory():
    H = constant_schedule(0.5 * SIGMA_X)
    grid = TimeGrid(1.0, 100)
    obs = sigma_z_monitor(2.0)
    ens = sme_ensemble(H, obs, grid, PLUS, seed=5, M=4, first_stream=10)
    one = sme_trajectory(H, obs, grid, PLUS, seed=5, stream=12)
    assert np.allclose(ens.final_states[2], one.states[-1], atol=1e-14)
    assert np.allclose(wiener_increments(5, [12], 100, grid.dt)[0], one.dW)


def test_stability_guard():
    with pytest.raises(StabilityGuard):
        sme_trajectory(constant_schedule(SIGMA_X), sigma_z_monitor(500.0), TimeGrid(1.0, 100), PLUS, seed=0)


def test_euler_scheme_reports_positivity_loss():
    # a strong measurement makes the linear scheme produce negative eigenvalues beyond the clipping budget
    with pytest.raises(PositivityLoss):
        sme_ensemble(constant_schedule(np.zeros((2, 2))), sigma_z_monitor(5.0), TimeGrid(0.5, 1000), PLUS,
                     seed=0, M=200, scheme="euler")


def test_lindblad_zero_kappa_is_unitary():
    H = constant_schedule(SIGMA_X + 0.2 * SIGMA_Z)
    grid = TimeGrid(1.0, 50)
    res = lindblad_evolve(H, sigma_z_monitor(0.0), grid, PLUS)
    assert max(abs(purity(r) - 1) for r in res.states) <= 1e-9
    U = matrix_exponential(H(0.0), -1j)
    assert np.allclose(res.states[-1], U @ PLUS @ U.conj().T, atol=1e-12)


def test_lindblad_pure_dephasing_closed_form():
    kappa = 5.0
    grid = TimeGrid(0.5, 50)
    res = lindblad_evolve(constant_schedule(np.zeros((2, 2)), T=0.5), sigma_z_monitor(kappa, 0.5), grid, PLUS)
    assert np.allclose(res.states[:, 0, 1], 0.5 * np.exp(-2 * kappa * grid.times), atol=1e-13)
    assert np.allclose(res.states[:, 0, 0], 0.5, atol=1e-13)


def test_ensemble_dephasing_rate():
    kappa = 5.0
    grid = TimeGrid(0.5, 500)
    ens = sme_ensemble(constant_schedule(np.zeros((2, 2)), T=0.5), sigma_z_monitor(kappa, 0.5), grid, PLUS,
                       seed=2024, M=1000, thin=50)
    coh = np.abs(ens.mean_states[:, 0, 1])
    rate = -linregress(ens.times, np.log(coh)).slope
    assert rate == pytest.approx(2 * kappa, rel=0.1)
    lind = lindblad_evolve(constant_schedule(np.zeros((2, 2)), T=0.5), sigma_z_monitor(kappa, 0.5), grid, PLUS)
    for t, rho in zip(ens.times, ens.mean_states):
        k = int(round(t / grid.dt))
        assert trace_distance(rho, lind.states[k]) <= 3 / np.sqrt(1000)


def test_comoving_constant_family_is_identity():
    fam = constant_family(ZBASIS)
    grid = TimeGrid(1.0, 10)
    W = evolve_intertwiner(fam, grid)
    states = np.broadcast_to(PLUS, (11, 2, 2))
    out = comoving_transform(states, W, MonitoredObservable(fam, 1.0))
    assert np.allclose(out.states, states)
    assert out.observable_drift < 1e-14
    with pytest.raises(GridMismatch):
        comoving_transform(states[:5], W)


def test_comoving_observable_is_static(qubit):
    H, grid, fr, fam = qubit
    W = evolve_intertwiner(fam, grid)
    obs = MonitoredObservable(fam, 10.0)
    out = comoving_transform(np.broadcast_to(PLUS, (grid.N + 1, 2, 2)), W, obs)
    assert out.observable_drift <= 1e-6


def test_transformed_hamiltonian_generates_comoving_states(qubit):
    H, grid, fr, fam = qubit
    W = evolve_intertwiner(fam, grid)
    psi = reference_states(H, grid, [1, 0], R=20, order=4)
    tilde = comoving_transform(psi, W).states
    Ht = transformed_hamiltonian(H, fam, W)
    lhs = 1j * np.gradient(tilde, grid.dt, axis=0, edge_order=2)
    rhs = np.einsum("kij,kj->ki", Ht, tilde)
    assert np.max(np.abs(lhs - rhs)[1:-1]) < 1e-5
    assert np.allclose(Ht, np.swapaxes(Ht.conj(), 1, 2))


def test_off_block_norm_decays_with_kappa(qubit):
    H, _, _, _ = qubit
    from zeno_sta.spectral import instantaneous_frame, spectral_projectors
    grid = TimeGrid(1.0, 2000)
    fam = spectral_projectors(instantaneous_frame(H, grid))
    W = evolve_intertwiner(fam, grid)
    P0 = fam(0.0)
    kappas = [10, 31.6, 100, 316, 1000]
    vals = []
    for kappa in kappas:
        res = lindblad_evolve(H, MonitoredObservable(fam, kappa), grid, P0[0])
        vals.append(off_block_norm(comoving_transform(res.states[-1:], W.W[-1:]).states[0], P0))
    assert linregress(np.log(kappas), np.log(vals)).slope == pytest.approx(-1.0, abs=0.2)
