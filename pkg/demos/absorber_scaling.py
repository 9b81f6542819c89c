"""How fast leakage and infidelity vanish as an absorber gets stronger.

With H - i kappa Q(t) the excited-state amplitude relaxes to a quasi-static
value of order 1/kappa. The script fits the log-log slopes of the steady
leakage fraction and of the infidelity against the Zeno-generator target,
then checks the adiabatic-elimination estimate of the excited amplitude.
"""
import numpy as np
from scipy.stats import linregress

from zeno_sta import (CapSpec, ModelSpec, TimeGrid, cap_evolve, evolve_intertwiner, instantaneous_frame,
                      model_hamiltonian, reference_states, spectral_projectors, zeno_hamiltonian)
from zeno_sta.cap import adiabatic_elimination_estimate, comoving_split, leakage_fraction, propagated_infidelity
from zeno_sta.sme import transformed_hamiltonian

H = model_hamiltonian(ModelSpec("rotating-qubit", {"omega": 1.0, "T": 1.0}))
grid = TimeGrid(1.0, 4000)
frame = instantaneous_frame(H, grid)
fam = spectral_projectors(frame)
psi0 = frame.vectors[0][:, 0]
target = reference_states(zeno_hamiltonian(H, fam, sector=0), TimeGrid(1.0, 1000), psi0, R=100, order=4)[-1]

kappas = np.array([10.0, 31.6, 100.0, 316.0, 1000.0])
leak, infid = [], []
for kappa in kappas:
    res = cap_evolve(H, CapSpec(kappa, fam), grid, psi0)
    leak.append(leakage_fraction(res, kappa))
    infid.append(propagated_infidelity(target, res.final))
    print(f"kappa={kappa:7.1f}  leakage {leak[-1]:.3e}  infidelity {infid[-1]:.3e}")
print("leakage slope   ", linregress(np.log(kappas), np.log(leak)).slope)
print("infidelity slope", linregress(np.log(kappas), np.log(infid)).slope)

# co-moving frame: psi_Q should follow Q0 H~ P0 psi_P / (i kappa)
W = evolve_intertwiner(fam, grid)
Ht = transformed_hamiltonian(H, fam, W)
for kappa in (100.0, 1000.0):
    res = cap_evolve(H, CapSpec(kappa, fam), grid, psi0)
    split = comoving_split(res.states, W, fam(0.0)[0])
    rep = adiabatic_elimination_estimate(Ht, split, kappa)
    steady = grid.times > 5 / kappa
    print(f"kappa={kappa:g}: max relative mismatch of eliminated amplitude {np.nanmax(rep.mismatch[steady]):.4f}")
