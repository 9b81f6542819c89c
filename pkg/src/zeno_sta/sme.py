"""Diffusive monitoring of a time-dependent observable ``X(t) = sum_n x_n P_n(t)``.

Two discretizations of the stochastic master equation are provided:

``"kraus"`` (default)
    ``rho' = M rho M^dag / tr``, ``M = I - (iH + kappa X^2/2) dt
    + sqrt(kappa) X dY + (kappa/2) X^2 (dY^2 - dt)``.  Positive by
    construction and first-order consistent with the SME.
``"euler"``
    Plain Euler-Maruyama on the SME with the Hermitian innovation
    ``X rho + rho X - 2 <X> rho``, followed by symmetrization, trace
    renormalization and eigenvalue clipping with a fixed budget.

The measurement record is ``dY = 2 sqrt(kappa) <X> dt + dW`` in both cases.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg

from .errors import GridMismatch, PositivityLoss, StabilityGuard
from .generators import transport_generator
from .metrics import check_density, pinching
from .operators import OperatorSchedule, TimeGrid, dagger, opnorm
from .spectral import ProjectorFamily, projector_derivative

CLIP_THRESHOLD = -1e-8
CLIP_BUDGET = 1e-6
_CHUNK = 2048


@dataclass(frozen=True)
class MonitoredObservable:
    fam: ProjectorFamily
    kappa: float
    x: Optional[tuple] = None

    def __post_init__(self):
        if self.kappa < 0:
            raise ValueError("measurement strength kappa must be >= 0")
        x = tuple(float(v) for v in (range(self.fam.m) if self.x is None else self.x))
        if len(x) != self.fam.m:
            raise ValueError(f"need {self.fam.m} eigenvalues, got {len(x)}")
        object.__setattr__(self, "x", x)

    @property
    def min_separation(self) -> float:
        xs = np.sort(self.x)
        return float(np.min(np.diff(xs))) if len(xs) > 1 else np.inf

    def X(self, t):
        return np.einsum("n,...nij->...ij", np.asarray(self.x), self.fam(t))


def dissipator(X, rho):
    """``X rho X - {X^2, rho}/2``; broadcasts over stacked ``rho``."""
    X2 = X @ X
    return X @ rho @ X - 0.5 * (X2 @ rho + rho @ X2)


def expectation(X, rho):
    return np.real(np.einsum("...ij,...ji->...", X, rho))


def innovation(X, rho):
    """Hermitian innovation ``X rho + rho X - 2 <X> rho``."""
    ex = expectation(X, rho)
    return X @ rho + rho @ X - 2 * ex[..., None, None] * rho


def _repair_positivity(rho):
    w, V = np.linalg.eigh(rho)
    neg = np.where(w < CLIP_THRESHOLD, -w, 0.0).sum(axis=-1)
    if np.any(neg > CLIP_BUDGET):
        raise PositivityLoss(f"eigenvalue clipping of weight {neg.max():.2e} exceeds budget; reduce dt")
    w = np.clip(w, 0.0, None)
    w = w / w.sum(axis=-1, keepdims=True)
    return (V * w[..., None, :]) @ dagger(V)


def _step(rho, H, X, kappa, dt, dW, scheme):
    """Advance a stack of conditioned states; returns ``(rho', dY)``."""
    dW = np.asarray(dW, dtype=float)
    sk = np.sqrt(kappa)
    dY = 2 * sk * expectation(X, rho) * dt + dW
    if scheme == "kraus":
        d = rho.shape[-1]
        X2 = X @ X
        base = np.eye(d) - (1j * H + 0.5 * kappa * X2) * dt
        Mk = (base + sk * dY[..., None, None] * X
              + 0.5 * kappa * (dY**2 - dt)[..., None, None] * X2)
        out = Mk @ rho @ dagger(Mk)
        out = 0.5 * (out + dagger(out))
        out = out / np.real(np.trace(out, axis1=-2, axis2=-1))[..., None, None]
        return out, dY
    if scheme == "euler":
        drift = -1j * (H @ rho - rho @ H) + kappa * dissipator(X, rho)
        out = rho + drift * dt + sk * innovation(X, rho) * dW[..., None, None]
        out = 0.5 * (out + dagger(out))
        out = out / np.real(np.trace(out, axis1=-2, axis2=-1))[..., None, None]
        return _repair_positivity(out), dY
    raise ValueError(f"unknown scheme {scheme!r}")


def sme_step(rho, H, X, kappa: float, dt: float, dW: float, scheme: str = "kraus"):
    """One step of the conditioned evolution; ``kappa = 0`` reduces to a Schrodinger step."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    out, _ = _step(np.asarray(rho, dtype=complex), np.asarray(H), np.asarray(X), kappa, dt, dW, scheme)
    return out


def trajectory_rng(seed: int, stream: int) -> np.random.Generator:
    """Counter-based stream ``stream`` of master seed ``seed``."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(stream)])))


def wiener_increments(seed: int, streams, N: int, dt: float):
    return np.stack([trajectory_rng(seed, j).standard_normal(N) for j in streams]) * np.sqrt(dt)


@dataclass(frozen=True)
class TrajectoryRecord:
    grid: TimeGrid
    dW: np.ndarray
    dY: np.ndarray
    times: np.ndarray
    states: np.ndarray
    seed: int
    stream: int


def _check_guard(obs: MonitoredObservable, grid: TimeGrid, guard: float):
    if obs.kappa * grid.dt > guard:
        raise StabilityGuard(f"kappa*dt = {obs.kappa * grid.dt:.3g} exceeds {guard}")


def _run(H, obs, grid, rho0, dW, scheme, thin, keep_record=False):
    rho = np.broadcast_to(check_density(rho0), (len(dW),) + np.shape(rho0)).astype(complex)
    t = grid.times[:-1]
    Hs = H(t)
    Xs = obs.X(t)
    thin_idx = list(range(0, grid.N + 1, thin))
    if thin_idx[-1] != grid.N:
        thin_idx.append(grid.N)
    mean = np.empty((len(thin_idx),) + rho.shape[1:], dtype=complex)
    kept = [] if keep_record else None
    dY = np.empty_like(dW) if keep_record else None
    want = set(thin_idx)
    j = 0
    if 0 in want:
        mean[j] = rho.mean(axis=0)
        if keep_record:
            kept.append(rho[0].copy())
        j += 1
    for k in range(grid.N):
        rho, dy = _step(rho, Hs[k], Xs[k], obs.kappa, grid.dt, dW[:, k], scheme)
        if keep_record:
            dY[:, k] = dy
        if k + 1 in want:
            mean[j] = rho.mean(axis=0)
            if keep_record:
                kept.append(rho[0].copy())
            j += 1
    return grid.times[thin_idx], mean, rho, kept, dY


def sme_trajectory(H: OperatorSchedule, obs: MonitoredObservable, grid: TimeGrid, rho0, seed: int,
                   stream: int = 0, thin: int = 1, scheme: str = "kraus", guard: float = 0.1) -> TrajectoryRecord:
    """Single conditioned trajectory driven by RNG stream ``(seed, stream)``."""
    _check_guard(obs, grid, guard)
    dW = wiener_increments(seed, [stream], grid.N, grid.dt)
    times, _, _, kept, dY = _run(H, obs, grid, rho0, dW, scheme, thin, keep_record=True)
    return TrajectoryRecord(grid, dW[0], dY[0], times, np.array(kept), int(seed), int(stream))


@dataclass(frozen=True)
class EnsembleResult:
    times: np.ndarray
    mean_states: np.ndarray
    final_states: np.ndarray
    seed: int
    M: int


def sme_ensemble(H: OperatorSchedule, obs: MonitoredObservable, grid: TimeGrid, rho0, seed: int, M: int,
                 thin: int = 1, scheme: str = "kraus", guard: float = 0.1, first_stream: int = 0) -> EnsembleResult:
    """Run ``M`` trajectories (streams ``first_stream..first_stream+M-1``) side by side.

    Trajectories are stepped together as one array; each still draws its
    Wiener increments from its own stream, so member ``j`` reproduces
    ``sme_trajectory(..., stream=first_stream + j)``.
    """
    _check_guard(obs, grid, guard)
    dW = wiener_increments(seed, range(first_stream, first_stream + M), grid.N, grid.dt)
    times, mean, final, _, _ = _run(H, obs, grid, rho0, dW, scheme, thin)
    return EnsembleResult(times, mean, final, int(seed), int(M))


def _liouvillian(H, X, kappa):
    """Row-major superoperator of ``-i[H, .] + kappa D[X]`` (stacks allowed)."""
    d = H.shape[-1]
    eye = np.eye(d)
    X2 = X @ X

    def kron(A, B):
        out = np.einsum("...ij,...kl->...ikjl", A, B)
        return out.reshape(out.shape[:-4] + (d * d, d * d))

    XT = np.swapaxes(X, -1, -2)
    return (-1j * (kron(H, eye) - kron(eye, np.swapaxes(H, -1, -2)))
            + kappa * (kron(X, XT) - 0.5 * kron(X2, eye) - 0.5 * kron(eye, np.swapaxes(X2, -1, -2))))


@dataclass(frozen=True)
class LindbladResult:
    times: np.ndarray
    states: np.ndarray
    min_eigenvalue: float


def lindblad_evolve(H: OperatorSchedule, obs: MonitoredObservable, grid: TimeGrid, rho0,
                    positivity_tol: float = 1e-6) -> LindbladResult:
    """Unconditional master equation via midpoint-frozen Liouvillian exponentials."""
    rho = check_density(rho0)
    d = rho.shape[0]
    mids = grid.midpoints
    states = np.empty((grid.N + 1, d, d), dtype=complex)
    states[0] = rho
    v = rho.reshape(-1)
    for c0 in range(0, grid.N, _CHUNK):
        tm = mids[c0:c0 + _CHUNK]
        props = scipy.linalg.expm(_liouvillian(H(tm), obs.X(tm), obs.kappa) * grid.dt)
        for j, Pk in enumerate(props):
            v = Pk @ v
            states[c0 + j + 1] = v.reshape(d, d)
    states = 0.5 * (states + dagger(states))
    min_eig = float(np.linalg.eigvalsh(states).min())
    if min_eig < -positivity_tol:
        raise PositivityLoss(f"unconditional state eigenvalue {min_eig:.2e}")
    return LindbladResult(grid.times, states, min_eig)


@dataclass(frozen=True)
class ComovingStates:
    states: np.ndarray
    observable_drift: float


def comoving_transform(states, W, obs: Optional[MonitoredObservable] = None) -> ComovingStates:
    """``rho~ = W^dag rho W`` (or ``psi~ = W^dag psi`` for kets) along the grid.

    With ``obs`` the residual motion of the measurement operator,
    ``max_k ||W^dag X(t_k) W - X(0)||``, is reported.
    """
    states = np.asarray(states)
    Ws = W.W if hasattr(W, "W") else np.asarray(W)
    if len(states) != len(Ws):
        raise GridMismatch(f"{len(states)} states vs {len(Ws)} intertwiner samples")
    Wd = dagger(Ws)
    if states.ndim == 2:
        out = np.einsum("kij,kj->ki", Wd, states)
    else:
        out = Wd @ states @ Ws
    drift = 0.0
    if obs is not None:
        times = W.grid.times if hasattr(W, "grid") else obs.fam.T * np.linspace(0, 1, len(Ws))
        X = obs.X(times)
        drift = max(opnorm(x) for x in (Wd @ X @ Ws - X[0]))
    return ComovingStates(out, drift)


def transformed_hamiltonian(H: OperatorSchedule, fam: ProjectorFamily, W):
    """Co-moving generator ``W^dag H W - i W^dag K W`` at the intertwiner's grid points."""
    t = W.grid.times
    K = transport_generator(fam(t), projector_derivative(fam, t, 1), check=False)
    Wd = dagger(W.W)
    return Wd @ H(t) @ W.W - 1j * Wd @ K @ W.W


def off_block_norm(rho, Ps) -> float:
    """Frobenius norm of the inter-sector part ``rho - sum_n P_n rho P_n``."""
    return float(np.linalg.norm(rho - pinching(rho, Ps)))
