"""Simulation of Zeno dragging by moving measurements and absorbers.

Submodules
----------
operators   Hamiltonian schedules, time grids and the model catalogue.
spectral    Instantaneous eigenframes and projector families.
generators  Zeno Hamiltonians, counterdiabatic terms, leakage operators.
strobe      Stroboscopic projective protocols.
sme         Continuous (diffusive) monitoring and the Lindblad limit.
cap         Complex absorbing potentials.
metrics     Fidelity, entropy, pinching.
oracle      Refined reference propagation and channel tomography.
harness     Configuration, sweeps, export and the command line.
"""
from . import errors
from .cap import (CapSpec, adiabatic_elimination_estimate, cap_evolve, comoving_split,
                  effective_generator, leakage_fraction, multi_sector_separation_check,
                  propagated_infidelity, schulman_compare, schulman_compare_at)
from .generators import (Intertwiner, adiabatic_phases, cd_hamiltonian, cd_term, evolve_intertwiner,
                         gamma_cross_and_bound, gamma_dt, gamma_kappa, identity_suite, kato_avron_hamiltonian,
                         multi_sector_zeno_hamiltonian, transport_generator, zeno_generators,
                         zeno_hamiltonian)
from .metrics import fidelity, pinch, pinching, purity, trace_distance, von_neumann_entropy
from .operators import (ModelSpec, OperatorSchedule, TimeGrid, constant_schedule, matrix_exponential,
                        model_hamiltonian)
from .oracle import channel_tomography, reference_states, reference_unitary
from .sme import (MonitoredObservable, comoving_transform, lindblad_evolve, sme_ensemble, sme_step,
                  sme_trajectory, transformed_hamiltonian)
from .spectral import (ProjectorFamily, constant_family, instantaneous_frame, projector_derivative,
                       random_smooth_family, rotated_family, spectral_projectors)
from .strobe import (dilation_channel_step, strobe_evolve_channel, strobe_evolve_conditioned,
                     strobe_evolve_selective, strobe_step)

__version__ = "0.1.0"
