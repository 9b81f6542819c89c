"""Stroboscopic Zeno protocols.

Each step evolves with ``exp(-i H dt)`` (exact exponential, ``H`` frozen at
the left end of the step by default) and then projects onto the monitored
subspace(s) at the new time.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import (BoundaryStencil, InitialStateOutsideSubspace,
                     ZeroSurvival)
from .generators import _check_projector
from .metrics import check_density
from .operators import OperatorSchedule, TimeGrid, matrix_exponential, unitary_steps
from .spectral import ProjectorFamily, projector_derivative

_LOG_TINY = np.log(1e-300)


def strobe_step(H, P_now, P_next, dt: float):
    """One-step conditioned map ``P_next exp(-i H dt) P_now``."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    P_now = _check_projector(P_now)
    P_next = _check_projector(P_next)
    return P_next @ matrix_exponential(H, -1j * dt, hermitian=True) @ P_now


def _frozen_hamiltonians(H: OperatorSchedule, grid: TimeGrid, freeze: str):
    if freeze == "left":
        return H(grid.times[:-1])
    if freeze == "midpoint":
        return H(grid.midpoints)
    raise ValueError(f"freeze must be 'left' or 'midpoint', got {freeze!r}")


def _derivative_or_nan(fam: ProjectorFamily, ts):
    """Projector derivatives at ``ts``; NaN where a finite-difference stencil would leave the domain."""
    try:
        return projector_derivative(fam, ts, 1)
    except BoundaryStencil:
        out = np.full(np.shape(ts) + (fam.m, fam.dim, fam.dim), np.nan, dtype=complex)
        h = fam.step
        ok = (ts - h >= 0) & (ts + h <= fam.T)
        if np.any(ok):
            out[ok] = projector_derivative(fam, ts[ok], 1)
        return out


@dataclass(frozen=True)
class StrobeResult:
    times: np.ndarray
    p_surv: np.ndarray
    cum_surv: np.ndarray
    leak_estimate: np.ndarray
    state: np.ndarray
    propagated: np.ndarray
    states: np.ndarray
    outcomes: Optional[np.ndarray] = None

    @property
    def leak(self):
        return 1.0 - self.p_surv


def strobe_evolve_conditioned(H: OperatorSchedule, fam: ProjectorFamily, grid: TimeGrid, psi0,
                              sector: int = 0, freeze: str = "left") -> StrobeResult:
    """Post-selected evolution inside the moving subspace of ``fam`` sector ``sector``.

    ``propagated`` is the unnormalized ``U_N(T) psi0``; ``state`` is its
    normalization.  ``leak_estimate[k]`` is the leading-order prediction
    ``dt^2 <psi_k| P H Q H P + P P' P' P |psi_k>`` for the step leaving ``t_k``.
    """
    t = grid.times
    dt = grid.dt
    Ps = fam(t)[:, sector]
    psi = np.asarray(psi0, dtype=complex)
    nrm = np.linalg.norm(psi)
    psi = psi / nrm
    outside = np.linalg.norm(psi - Ps[0] @ psi)
    if outside > 1e-8:
        raise InitialStateOutsideSubspace(f"||Q(0) psi0|| = {outside:.2e}")

    Us = unitary_steps(_frozen_hamiltonians(H, grid, freeze), dt)
    Hleft = H(t[:-1])
    Pd = _derivative_or_nan(fam, t[:-1])[:, sector]
    eye = np.eye(fam.dim)
    leak_ops = Ps[:-1] @ Hleft @ (eye - Ps[:-1]) @ Hleft @ Ps[:-1] + Ps[:-1] @ Pd @ Pd @ Ps[:-1]

    p_surv = np.empty(grid.N)
    leak_est = np.empty(grid.N)
    log_cum = np.zeros(grid.N + 1)
    states = np.empty((grid.N + 1, fam.dim), dtype=complex)
    states[0] = psi
    for k in range(grid.N):
        leak_est[k] = dt**2 * np.real(np.vdot(psi, leak_ops[k] @ psi))
        phi = Ps[k + 1] @ (Us[k] @ psi)
        s = np.real(np.vdot(phi, phi))
        p_surv[k] = s
        log_cum[k + 1] = log_cum[k] + (np.log(s) if s > 0 else -np.inf)
        if log_cum[k + 1] < _LOG_TINY:
            raise ZeroSurvival(f"cumulative survival underflow at step {k}")
        psi = phi / np.sqrt(s)
        states[k + 1] = psi
    cum = np.exp(log_cum)
    return StrobeResult(t, p_surv, cum, leak_est, psi, np.sqrt(cum[-1]) * psi, states)


def strobe_evolve_selective(H: OperatorSchedule, fam: ProjectorFamily, grid: TimeGrid, psi0,
                            rng: np.random.Generator, freeze: str = "left") -> StrobeResult:
    """Selective full-PVM protocol: sample an outcome each step and renormalize.

    ``p_surv[k]`` is the Born probability of the realized outcome, so
    ``cum_surv[-1]`` is the probability of the whole outcome record.
    """
    t = grid.times
    Ps = fam(t)
    Us = unitary_steps(_frozen_hamiltonians(H, grid, freeze), grid.dt)
    psi = np.asarray(psi0, dtype=complex)
    psi = psi / np.linalg.norm(psi)
    p_out = np.empty(grid.N)
    outcomes = np.empty(grid.N, dtype=int)
    states = np.empty((grid.N + 1, fam.dim), dtype=complex)
    states[0] = psi
    for k in range(grid.N):
        phi = Us[k] @ psi
        branches = Ps[k + 1] @ phi
        probs = np.real(np.einsum("ni,ni->n", branches.conj(), branches))
        probs = np.clip(probs, 0.0, None)
        probs /= probs.sum()
        n = int(rng.choice(len(probs), p=probs))
        outcomes[k] = n
        p_out[k] = probs[n]
        psi = branches[n] / np.linalg.norm(branches[n])
        states[k + 1] = psi
    cum = np.concatenate([[1.0], np.cumprod(p_out)])
    return StrobeResult(t, p_out, cum, np.full(grid.N, np.nan), psi, np.sqrt(cum[-1]) * psi,
                        states, outcomes)


@dataclass(frozen=True)
class ChannelEvolution:
    times: np.ndarray
    rho: np.ndarray
    traces: np.ndarray

    @property
    def rho_normalized(self):
        return self.rho / np.trace(self.rho).real


def strobe_evolve_channel(H: OperatorSchedule, fam: ProjectorFamily, grid: TimeGrid, rho0,
                          freeze: str = "left") -> ChannelEvolution:
    """Nonselective channel with Kraus operators ``P_n(t_{k+1}) exp(-i H dt) P_n(t_k)``.

    The map is trace non-increasing and is never renormalized internally;
    ``traces`` records the surviving weight after each step.
    """
    rho = check_density(rho0)
    Ps = fam(grid.times)
    Us = unitary_steps(_frozen_hamiltonians(H, grid, freeze), grid.dt)
    traces = np.empty(grid.N + 1)
    traces[0] = np.trace(rho).real
    for k in range(grid.N):
        kraus = Ps[k + 1] @ Us[k] @ Ps[k]
        rho = np.einsum("nij,jk,nlk->il", kraus, rho, kraus.conj())
        traces[k + 1] = np.trace(rho).real
    return ChannelEvolution(grid.times, rho, traces)


def dilation_unitary(Ps):
    """System-probe unitary ``sum_n P_n (x) W_n`` with cyclic probe shifts ``W_n |0> = |n>``."""
    Ps = np.asarray(Ps, dtype=complex)
    m = len(Ps)
    shifts = [np.roll(np.eye(m), n, axis=0) for n in range(m)]
    return sum(np.kron(P, S) for P, S in zip(Ps, shifts))


def dilation_channel_step(Ps, rho, validate: bool = True):
    """Couple to a probe in ``|0>``, entangle with :func:`dilation_unitary`, trace the probe out.

    ``validate=False`` admits arbitrary operators, as needed for tomography.
    """
    Ps = np.asarray(Ps, dtype=complex)
    rho = check_density(rho) if validate else np.asarray(rho, dtype=complex)
    d = rho.shape[0]
    m = len(Ps)
    probe = np.zeros((m, m), dtype=complex)
    probe[0, 0] = 1
    U = dilation_unitary(Ps)
    joint = U @ np.kron(rho, probe) @ U.conj().T
    return np.einsum("iaja->ij", joint.reshape(d, m, d, m))
