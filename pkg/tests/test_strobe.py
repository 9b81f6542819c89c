import numpy as np
import pytest

from zeno_sta.errors import InitialStateOutsideSubspace, InvalidDensityMatrix, NotAProjector
from zeno_sta.generators import kato_avron_hamiltonian
from zeno_sta.metrics import pinching, purity
from zeno_sta.operators import SIGMA_X, SIGMA_Z, TimeGrid, constant_schedule, matrix_exponential, opnorm
from zeno_sta.oracle import channel_tomography
from zeno_sta.spectral import constant_family, projector_derivative, random_smooth_family
from zeno_sta.strobe import (dilation_channel_step, dilation_unitary, strobe_evolve_channel,
                             strobe_evolve_conditioned, strobe_evolve_selective, strobe_step)

ZBASIS = [np.diag([1.0, 0.0]), np.diag([0.0, 1.0])]
PLUS = np.array([1, 1]) / np.sqrt(2)


def test_step_trivial_cases(rng):
    from zeno_sta.operators import random_hermitian
    H = random_hermitian(rng, 3)
    I = np.eye(3)
    assert opnorm(strobe_step(H, I, I, 0.1) - matrix_exponential(H, -0.1j)) < 1e-14
    P = np.diag([1, 1, 0])
    assert opnorm(strobe_step(H, P, P, 1e-9) - P) < 1e-8
    with pytest.raises(NotAProjector):
        strobe_step(H, 0.3 * I, I, 0.1)
    with pytest.raises(ValueError):
        strobe_step(H, I, I, 0.0)


def test_step_first_order_expansion(qubit):
    H, _, _, fam = qubit
    t = 0.3
    P, D = fam(t)[0], projector_derivative(fam, t)[0]
    HZ = kato_avron_hamiltonian(H(t), P, D)
    errs = []
    for dt in (1e-3, 5e-4):
        omega = strobe_step(H(t), P, fam(t + dt)[0], dt)
        approx = (np.eye(2) - 1j * HZ * dt) @ P
        errs.append(opnorm(omega - approx))
        assert errs[-1] <= 10 * dt**2 * max(1.0, opnorm(HZ)) ** 2
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.05)


def test_invariant_subspace_has_unit_survival():
    fam = constant_family(ZBASIS)
    res = strobe_evolve_conditioned(constant_schedule(SIGMA_Z), fam, TimeGrid(1.0, 50), [1, 0])
    assert np.all(np.abs(res.p_surv - 1) < 1e-12)


@pytest.mark.parametrize("dt", [1e-2, 3e-3, 1e-3])
def test_static_leak_per_step_is_dt_squared(dt):
    fam = constant_family(ZBASIS, T=10 * dt)
    res = strobe_evolve_conditioned(constant_schedule(SIGMA_X, T=10 * dt), fam, TimeGrid(10 * dt, 10), [1, 0])
    assert np.allclose(res.leak / dt**2, 1.0, rtol=0.05)
    assert np.allclose(res.leak_estimate, dt**2)


def test_conditioned_rotating_qubit_tracks_eigenstate(qubit):
    H, _, fr, fam = qubit
    grid = TimeGrid(1.0, 10_000)
    psi0 = fr.vectors[0][:, 0]
    res = strobe_evolve_conditioned(H, fam, grid, psi0)
    target = fam(1.0)[0]
    assert np.real(np.vdot(res.state, target @ res.state)) >= 1 - 1e-3
    assert np.linalg.norm(res.state) == pytest.approx(1.0)
    assert res.cum_surv[-1] == pytest.approx(np.prod(res.p_surv), rel=1e-10)
    # geometric leak dt^2 (pi/4)^2 per step
    assert np.allclose(res.leak, grid.dt**2 * (np.pi / 4) ** 2, rtol=1e-3)


def test_conditioned_rejects_state_outside_subspace(qubit):
    H, grid, fr, fam = qubit
    with pytest.raises(InitialStateOutsideSubspace):
        strobe_evolve_conditioned(H, fam, grid, fr.vectors[0][:, 1])


def test_channel_constant_family_single_step_is_pinching():
    fam = constant_family(ZBASIS)
    rho0 = np.outer(PLUS, PLUS)
    res = strobe_evolve_channel(constant_schedule(np.zeros((2, 2))), fam, TimeGrid(1.0, 1), rho0)
    assert np.allclose(res.rho, pinching(rho0, ZBASIS))
    assert np.allclose(res.rho, np.eye(2) / 2)


def test_channel_mixed_state_follows_projectors(qubit):
    H, _, fr, fam = qubit
    grid = TimeGrid(1.0, 10_000)
    V0 = fr.vectors[0]
    psi = V0 @ np.array([np.sqrt(0.3), np.sqrt(0.7)])
    res = strobe_evolve_channel(H, fam, grid, np.outer(psi, psi.conj()))
    Ps = fam(1.0)
    pops = np.real(np.einsum("nij,ji->n", Ps, res.rho))
    assert np.allclose(pops, [0.3, 0.7], atol=1e-3)
    V = fr.vectors[-1]
    assert abs((V.conj().T @ res.rho @ V)[0, 1]) <= 1e-3
    assert np.all(np.diff(res.traces) <= 1e-15)


def test_channel_commuting_case_keeps_purity():
    Ps = [np.diag([1, 1, 0]), np.diag([0, 0, 1])]
    H = np.zeros((3, 3), dtype=complex)
    H[:2, :2] = SIGMA_X
    H[2, 2] = 0.4
    fam = constant_family(Ps)
    psi = np.array([0.6, 0.8j, 0])
    res = strobe_evolve_channel(constant_schedule(H), fam, TimeGrid(1.0, 100), np.outer(psi, psi.conj()))
    assert purity(res.rho) == pytest.approx(1.0, abs=1e-10)
    U = matrix_exponential(H, -1j)
    assert np.allclose(res.rho, U @ np.outer(psi, psi.conj()) @ U.conj().T, atol=1e-12)


def test_channel_rejects_invalid_density():
    fam = constant_family(ZBASIS)
    with pytest.raises(InvalidDensityMatrix):
        strobe_evolve_channel(constant_schedule(SIGMA_X), fam, TimeGrid(1.0, 2), np.diag([1.2, -0.2]))


def test_selective_outcome_frequencies():
    # one step from |+> with H = 0: outcomes are fair coin flips
    fam = constant_family(ZBASIS)
    H = constant_schedule(np.zeros((2, 2)))
    grid = TimeGrid(1.0, 1)
    rng = np.random.default_rng(7)
    n = 4000
    hits = sum(strobe_evolve_selective(H, fam, grid, PLUS, rng).outcomes[0] for _ in range(n))
    assert abs(hits / n - 0.5) <= 4 * np.sqrt(0.25 / n)


def test_selective_record_probability(qubit):
    H, grid, fr, fam = qubit
    res = strobe_evolve_selective(H, fam, TimeGrid(1.0, 200), PLUS, np.random.default_rng(1))
    assert res.cum_surv[-1] == pytest.approx(np.prod(res.p_surv))
    assert np.all((res.p_surv > 0) & (res.p_surv <= 1))
    assert np.linalg.norm(res.state) == pytest.approx(1.0)


def test_dilation_unitary_is_unitary(rng):
    fam = random_smooth_family(rng, 4, ranks=(1, 1, 2))
    U = dilation_unitary(fam(0.3))
    assert opnorm(U.conj().T @ U - np.eye(12)) < 1e-12


def test_dilation_trivial_cases():
    rho = np.outer(PLUS, PLUS)
    assert np.allclose(dilation_channel_step([np.eye(2)], rho), rho)
    assert np.allclose(dilation_channel_step(ZBASIS, rho), np.eye(2) / 2)


def test_dilation_matches_pinching_on_operator_basis(rng):
    Ps = random_smooth_family(rng, 4, ranks=(1, 1, 2))(0.0)
    dev = channel_tomography(lambda B: dilation_channel_step(Ps, B, validate=False),
                             lambda B: pinching(B, Ps), 4)
    assert dev <= 1e-12
