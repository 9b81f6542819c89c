"""Quantum trajectories under continuous sigma_z monitoring.

Individual records collapse |+> towards |0> or |1>; averaging many
trajectories reproduces the master equation, whose coherence decays at
rate kappa (x0 - x1)^2 / 2 = 2 kappa for x = +-1.
"""
import numpy as np

from zeno_sta import MonitoredObservable, TimeGrid, constant_family, constant_schedule, lindblad_evolve, sme_ensemble
from zeno_sta.metrics import trace_distance
from zeno_sta.sme import sme_trajectory

kappa, T = 5.0, 0.5
grid = TimeGrid(T, 1000)
H = constant_schedule(np.zeros((2, 2)), T=T)
obs = MonitoredObservable(constant_family([np.diag([1.0, 0.0]), np.diag([0.0, 1.0])], T=T), kappa, x=(1.0, -1.0))
plus = np.full((2, 2), 0.5, dtype=complex)

for stream in range(3):
    traj = sme_trajectory(H, obs, grid, plus, seed=42, stream=stream, thin=250)
    print(f"trajectory {stream}: <0|rho|0> =", np.round(traj.states[:, 0, 0].real, 3),
          f" integrated record {traj.dY.sum():+.3f}")

lind = lindblad_evolve(H, obs, grid, plus)
for M in (50, 200, 1000):
    ens = sme_ensemble(H, obs, grid, plus, seed=42, M=M, thin=grid.N)
    print(f"M={M:5d}: trace distance to master equation {trace_distance(ens.mean_states[-1], lind.states[-1]):.4f}"
          f"  (3/sqrt(M) = {3 / np.sqrt(M):.4f})")
print("coherence at T:", abs(lind.states[-1, 0, 1]), "closed form:", 0.5 * np.exp(-2 * kappa * T))
