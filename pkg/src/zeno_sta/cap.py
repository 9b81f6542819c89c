"""Non-Hermitian evolution with moving complex absorbing potentials.

The two-sector absorber is ``kappa Q(t)`` with ``Q = I - P_protected``; the
multi-sector absorber is ``kappa sum_n (lambda_n - lambda_min) P_n(t)``.
Each step applies ``exp(-i H_nh(t_mid) dt)`` with the non-Hermitian
generator frozen at the step midpoint.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg

from .errors import NormUnderflow
from .generators import _check_projector, gamma_cross_and_bound, gamma_dt, gamma_kappa
from .operators import OperatorSchedule, TimeGrid, dagger, opnorm
from .spectral import ProjectorFamily, projector_derivative

_CHUNK = 2048
NORM_FLOOR = 1e-300


@dataclass(frozen=True)
class CapSpec:
    """Absorber specification.

    ``mode="two-sector"`` absorbs outside sector ``protected`` of ``fam``;
    ``mode="multi-sector"`` uses the weights ``lambdas``.  With ``shift``
    the smallest weight is subtracted so the least-absorbed sector is
    decay-free.
    """

    kappa: float
    fam: ProjectorFamily
    mode: str = "two-sector"
    lambdas: Optional[tuple] = None
    protected: int = 0
    shift: bool = True

    def __post_init__(self):
        if not self.kappa >= 0:
            raise ValueError("kappa must be >= 0")
        if self.mode == "two-sector":
            if not 0 <= self.protected < self.fam.m:
                raise ValueError(f"protected sector {self.protected} out of range")
        elif self.mode == "multi-sector":
            if self.lambdas is None or len(self.lambdas) != self.fam.m:
                raise ValueError(f"multi-sector mode needs {self.fam.m} weights")
            object.__setattr__(self, "lambdas", tuple(float(v) for v in self.lambdas))
        else:
            raise ValueError(f"unknown CAP mode {self.mode!r}")

    @property
    def offset(self) -> float:
        """Weight subtracted before evolution (0 without ``shift``)."""
        if self.mode == "multi-sector" and self.shift:
            return min(self.lambdas)
        return 0.0

    @property
    def weights(self) -> np.ndarray:
        if self.mode == "two-sector":
            w = np.ones(self.fam.m)
            w[self.protected] = 0.0
            return w
        return np.asarray(self.lambdas) - self.offset

    def absorber(self, t):
        """``Lambda(t)`` (without the factor ``kappa``)."""
        return np.einsum("n,...nij->...ij", self.weights, self.fam(t))


@dataclass(frozen=True)
class CapResult:
    times: np.ndarray
    states: np.ndarray
    norms: np.ndarray
    absorbed_norms: np.ndarray
    monotone: bool
    offset: float

    @property
    def final(self):
        return self.states[-1]

    @property
    def final_normalized(self):
        return self.states[-1] / np.linalg.norm(self.states[-1])


def cap_evolve(H: OperatorSchedule, cap: CapSpec, grid: TimeGrid, psi0) -> CapResult:
    """Propagate ``psi0`` under ``H - i kappa Lambda(t)``.

    ``psi0`` may be a ket or a ``(d, r)`` block of kets.  ``norms`` holds
    ``||psi||`` (Frobenius for blocks) and ``absorbed_norms`` holds
    ``||Lambda psi||`` on the grid.
    """
    psi = np.asarray(psi0, dtype=complex)
    if abs(np.linalg.norm(psi) - (1.0 if psi.ndim == 1 else np.sqrt(psi.shape[1]))) > 1e-8:
        raise ValueError("psi0 must be normalized")
    states = np.empty((grid.N + 1,) + psi.shape, dtype=complex)
    states[0] = psi
    mids = grid.midpoints
    for c0 in range(0, grid.N, _CHUNK):
        tm = mids[c0:c0 + _CHUNK]
        gen = H(tm) - 1j * cap.kappa * cap.absorber(tm)
        props = scipy.linalg.expm(-1j * grid.dt * gen)
        for j, U in enumerate(props):
            psi = U @ psi
            k = c0 + j + 1
            states[k] = psi
        nrm = np.linalg.norm(psi)
        if not nrm > NORM_FLOOR:
            raise NormUnderflow(f"state norm {nrm:.1e} at t = {grid.times[k]:.4g}")
    block = states if psi.ndim == 2 else states[..., None]
    norms = np.linalg.norm(block, axis=(1, 2))
    absorbed = np.linalg.norm(cap.absorber(grid.times) @ block, axis=(1, 2))
    monotone = bool(np.all(np.diff(norms) <= 1e-10 * norms[:-1]))
    return CapResult(grid.times, states, norms, absorbed, monotone, cap.offset)


def leakage_fraction(result: CapResult, kappa: float, steady_after: float = 5.0) -> float:
    """Mean of ``||Q psi|| / ||psi||`` over the steady window ``t > steady_after / kappa``."""
    sel = result.times > steady_after / kappa
    if not np.any(sel):
        raise ValueError("grid has no points in the steady window")
    return float(np.mean(result.absorbed_norms[sel] / result.norms[sel]))


def propagated_infidelity(target, state) -> float:
    """``1 - |<target|state>|^2`` with ``state`` left unnormalized, so norm loss counts."""
    target = np.asarray(target)
    target = target / np.linalg.norm(target)
    return float(1.0 - abs(np.vdot(target, state)) ** 2)


@dataclass(frozen=True)
class ComovingSplit:
    times: np.ndarray
    psi_P: np.ndarray
    psi_Q: np.ndarray
    P0: np.ndarray

    @property
    def norm_P(self):
        return np.linalg.norm(self.psi_P, axis=-1)

    @property
    def norm_Q(self):
        return np.linalg.norm(self.psi_Q, axis=-1)


def comoving_split(states, W, P0) -> ComovingSplit:
    """Split ``psi~ = W^dag psi`` into its ``P_0`` and ``Q_0`` parts."""
    P0 = _check_projector(P0)
    states = np.asarray(states)
    tilde = np.einsum("kji,kj->ki", W.W.conj(), states)
    psi_P = tilde @ P0.T
    return ComovingSplit(W.grid.times, psi_P, tilde - psi_P, P0)


@dataclass(frozen=True)
class EliminationReport:
    estimate: np.ndarray
    mismatch: np.ndarray


def adiabatic_elimination_estimate(Htilde, split: ComovingSplit, kappa: float) -> EliminationReport:
    """Quasi-static ``psi_Q ~ (1/(i kappa)) Q_0 H~ P_0 psi_P`` and its relative mismatch.

    ``mismatch[k] = ||psi_Q - estimate|| / ||psi_Q||`` (NaN where ``psi_Q``
    vanishes).  Warns when ``kappa`` is less than ten times ``max ||H~||``.
    """
    Htilde = np.asarray(Htilde)
    scale = max(opnorm(h) for h in Htilde)
    if kappa < 10 * scale:
        warnings.warn(f"kappa = {kappa:g} is not large compared with ||H~|| = {scale:.3g}", stacklevel=2)
    Q0 = np.eye(split.P0.shape[0]) - split.P0
    est = np.einsum("ij,kjl,lm,km->ki", Q0, Htilde, split.P0, split.psi_P) / (1j * kappa)
    nq = split.norm_Q
    with np.errstate(invalid="ignore", divide="ignore"):
        mismatch = np.where(nq > 0, np.linalg.norm(split.psi_Q - est, axis=-1) / nq, np.nan)
    return EliminationReport(est, mismatch)


@dataclass(frozen=True)
class SectorReport:
    times: np.ndarray
    populations: np.ndarray
    reference: np.ndarray
    transfer: float
    ratio_spread: float
    offset: float


def sector_populations(states, Ps):
    """``||P_n(t_k) psi_k||^2`` with shape ``(N+1, m)``."""
    amps = np.einsum("knij,kj->kni", Ps, states)
    return np.sum(np.abs(amps) ** 2, axis=-1)


def multi_sector_separation_check(H: OperatorSchedule, cap: CapSpec, grid: TimeGrid, psi0,
                                  start_sector: int = 0, min_reference: float = 1e-8) -> SectorReport:
    """Evolve under the multi-sector absorber and compare with the absorber-free run.

    ``transfer`` is ``1 - ||P_s(T) psi(T)||^2`` for the starting sector
    ``s``: weight that left it, either absorbed or still present elsewhere.
    ``ratio_spread`` is the largest relative deviation between sectors of
    ``p_n(t) / p_n^(kappa=0)(t)``; it vanishes when the absorber acts only
    as a global decay.
    """
    if cap.mode != "multi-sector":
        raise ValueError("multi_sector_separation_check needs a multi-sector CapSpec")
    Ps = cap.fam(grid.times)
    res = cap_evolve(H, cap, grid, psi0)
    free = cap_evolve(H, CapSpec(0.0, cap.fam, "multi-sector", cap.lambdas, shift=cap.shift), grid, psi0)
    pops = sector_populations(res.states, Ps)
    ref = sector_populations(free.states, Ps)
    spread = 0.0
    for k in range(len(pops)):
        ok = ref[k] > min_reference
        if ok.sum() < 2:
            continue
        r = pops[k, ok] / ref[k, ok]
        spread = max(spread, float(np.max(np.abs(r / r.mean() - 1))))
    transfer = float(1.0 - pops[-1, start_sector])
    return SectorReport(grid.times, pops, ref, transfer, spread, res.offset)


@dataclass(frozen=True)
class SchulmanReport:
    gamma_dt: np.ndarray
    gamma_kappa: np.ndarray
    mismatch: float
    cross_norm: float
    bound: float
    kappa: float
    dt: float

    @property
    def bound_ratio(self) -> float:
        return self.cross_norm / self.bound if self.bound > 0 else 0.0


def schulman_compare(H, P, Pdot, dt: float, kappa: Optional[float] = None) -> SchulmanReport:
    """Compare the stroboscopic and absorber leakage operators at matched ``kappa = 1/dt``."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    kappa = 1.0 / dt if kappa is None else kappa
    H = np.asarray(H, dtype=complex)
    g_dt = gamma_dt(H, P, Pdot)
    g_k = gamma_kappa(H, P, Pdot)
    cross = gamma_cross_and_bound(H, P, Pdot)
    return SchulmanReport(g_dt, g_k, opnorm(g_dt - g_k), cross.lhs, cross.rhs, kappa, dt)


def schulman_compare_at(H: OperatorSchedule, fam: ProjectorFamily, t: float, dt: float,
                        sector: int = 0, kappa: Optional[float] = None) -> SchulmanReport:
    P = fam(t)[sector]
    D = projector_derivative(fam, t, 1)[sector]
    return schulman_compare(H(t), P, D, dt, kappa)


def effective_generator(states, basis, times):
    """Generator ``G = i B' B^{-1}`` of the block ``B(t) = V(t)^dag Psi(t)``.

    ``states`` are evolved kets (``(N+1, d)``) or blocks (``(N+1, d, r)``);
    ``basis`` holds an orthonormal frame of the protected sector, shape
    ``(N+1, d, r)``.  ``B'`` is a second-order finite difference on the grid.
    """
    states = np.asarray(states)
    if states.ndim == 2:
        states = states[..., None]
    B = dagger(np.asarray(basis)) @ states
    dB = np.gradient(B, np.asarray(times), axis=0, edge_order=2)
    return 1j * dB @ np.linalg.inv(B)
