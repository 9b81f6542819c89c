"""Drag a qubit along its rotating ground state three ways.

A qubit Hamiltonian H(t) = (omega/2)(cos th sigma_z + sin th sigma_x) turns
by a quarter revolution. We keep the state on the moving ground state by
(1) frequent projective measurements, (2) continuous weak monitoring of
the instantaneous energy observable, and (3) an absorbing potential on
the excited state, and compare all three against the Zeno generator.
"""
import numpy as np

from zeno_sta import (CapSpec, ModelSpec, MonitoredObservable, TimeGrid, cap_evolve, fidelity,
                      instantaneous_frame, model_hamiltonian, reference_states, sme_ensemble,
                      spectral_projectors, strobe_evolve_conditioned, zeno_hamiltonian)

H = model_hamiltonian(ModelSpec("rotating-qubit", {"omega": 1.0, "T": 1.0}))
grid = TimeGrid(1.0, 5000)
frame = instantaneous_frame(H, grid)
fam = spectral_projectors(frame)
psi0 = frame.vectors[0][:, 0]

# reference: evolution generated by P H P + i[P', P] on a refined grid
target = reference_states(zeno_hamiltonian(H, fam, sector=0), grid, psi0, R=20, order=4)[-1]

# without any measurement the state lags behind the rotating eigenbasis
free = reference_states(H, grid, psi0, R=20, order=4)[-1]
print(f"no control          F = {fidelity(target, free):.4f}")

for dt in (1e-1, 1e-2, 1e-3):
    res = strobe_evolve_conditioned(H, fam, TimeGrid(1.0, int(1 / dt)), psi0)
    print(f"strobe dt={dt:<6g}    F = {fidelity(target, res.state):.6f}   "
          f"survival = {res.cum_surv[-1]:.4f}")

rho0 = np.outer(psi0, psi0.conj())
for kappa in (10.0, 50.0, 250.0):
    ens = sme_ensemble(H, MonitoredObservable(fam, kappa, x=(-1.0, 1.0)), grid, rho0, seed=0, M=200,
                       thin=grid.N)
    print(f"monitor kappa={kappa:<5g} F = {fidelity(target, ens.mean_states[-1]):.4f}")

for kappa in (10.0, 50.0, 250.0):
    res = cap_evolve(H, CapSpec(kappa, fam), grid, psi0)
    print(f"absorber kappa={kappa:<4g} F = {fidelity(target, res.final_normalized):.6f}   "
          f"norm = {res.norms[-1]:.4f}")
