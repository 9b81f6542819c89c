"""Instantaneous eigenframes and smooth projector families."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import BoundaryStencil, FamilyInvalid, GapCollapse
from .operators import OperatorSchedule, TimeGrid, dagger, opnorm, random_unitary

DEFAULT_GAP_TOL = 1e-8


@dataclass(frozen=True)
class EigenFrame:
    """Gauge-fixed eigenbasis of ``H(t)`` sampled on a grid.

    ``vectors[k]`` holds the eigenvectors at ``grid.times[k]`` as columns,
    phased so that successive overlaps are real and non-negative.
    """

    H: OperatorSchedule
    grid: TimeGrid
    energies: np.ndarray
    vectors: np.ndarray
    gap_tol: float = DEFAULT_GAP_TOL

    @property
    def times(self):
        return self.grid.times

    @property
    def min_gap(self) -> float:
        if self.energies.shape[1] < 2:
            return np.inf
        return float(np.min(np.diff(np.sort(self.energies, axis=1), axis=1)))


def _min_gaps(w):
    if w.shape[-1] < 2:
        return np.full(w.shape[:-1], np.inf)
    return np.min(np.diff(w, axis=-1), axis=-1)


def _fix_initial_phase(V):
    idx = np.argmax(np.abs(V), axis=0)
    ph = V[idx, np.arange(V.shape[1])]
    return V * (np.abs(ph) / ph)


def instantaneous_frame(H: OperatorSchedule, grid: TimeGrid, gap_tol: float = DEFAULT_GAP_TOL) -> EigenFrame:
    """Diagonalize ``H`` on ``grid`` with continuity ordering and parallel-transport phases."""
    if not H.hermitian:
        raise ValueError("instantaneous_frame needs a Hermitian-flagged schedule")
    t = grid.times
    Hs = H(t)
    w, V = np.linalg.eigh(Hs)
    gaps = _min_gaps(w)
    k_bad = int(np.argmin(gaps))
    if gaps[k_bad] < gap_tol:
        raise GapCollapse(t[k_bad], gaps[k_bad])

    V = V.copy()
    w = w.copy()
    V[0] = _fix_initial_phase(V[0])
    for k in range(1, len(t)):
        ov = dagger(V[k - 1]) @ V[k]
        rows, cols = linear_sum_assignment(-np.abs(ov) ** 2)
        perm = cols[np.argsort(rows)]
        V[k] = V[k][:, perm]
        w[k] = w[k][perm]
        diag = np.einsum("ij,ij->j", V[k - 1].conj(), V[k])
        V[k] = V[k] * (np.abs(diag) / np.where(diag == 0, 1, diag))
    return EigenFrame(H, grid, w, V, gap_tol)


@dataclass(frozen=True)
class ProjectorFamily:
    """Complete orthogonal projector family ``{P_n(t)}``.

    ``func(t)`` broadcasts over an array of times and returns shape
    ``t.shape + (m, d, d)``.  ``derivative(t, order)`` is an optional
    analytic callback with the same output shape; it may return ``None``
    for orders it does not support, in which case finite differences with
    step ``h`` (default ``1e-5 T``) are used.
    """

    dim: int
    ranks: tuple
    func: Callable
    derivative: Optional[Callable] = None
    T: float = 1.0
    h: Optional[float] = None
    name: str = ""
    H: Optional[OperatorSchedule] = None

    @property
    def m(self) -> int:
        return len(self.ranks)

    @property
    def step(self) -> float:
        return 1e-5 * self.T if self.h is None else self.h

    def __call__(self, t):
        return np.asarray(self.func(np.asarray(t, dtype=float)), dtype=complex)

    def sector(self, n: int) -> "ProjectorFamily":
        """Two-sector family ``{P_n, I - P_n}`` built from sector ``n``."""
        d = self.dim

        def func(t):
            P = self(t)[..., n, :, :]
            return np.stack([P, np.eye(d) - P], axis=-3)

        deriv = None
        if self.derivative is not None:
            def deriv(t, order):
                r = self.derivative(t, order)
                if r is None:
                    return None
                D = np.asarray(r)[..., n, :, :]
                return np.stack([D, -D], axis=-3)

        ranks = (self.ranks[n], d - self.ranks[n])
        return ProjectorFamily(d, ranks, func, deriv, self.T, self.h, f"{self.name}[{n}]", self.H)


def family_defects(Ps) -> dict:
    """Largest violation of each projector-family invariant."""
    Ps = np.asarray(Ps)
    d = Ps.shape[-1]
    idem = max(opnorm(P @ P - P) for P in Ps)
    herm = max(opnorm(P - dagger(P)) for P in Ps)
    orth = 0.0
    for i in range(len(Ps)):
        for j in range(len(Ps)):
            if i != j:
                orth = max(orth, opnorm(Ps[i] @ Ps[j]))
    comp = opnorm(Ps.sum(axis=0) - np.eye(d))
    return {"idempotence": idem, "hermiticity": herm, "orthogonality": orth, "completeness": comp}


def check_family(Ps, tol: float = 1e-8, complete: bool = True):
    defects = family_defects(Ps)
    if not complete:
        defects.pop("completeness")
    bad = {k: v for k, v in defects.items() if v > tol}
    if bad:
        raise FamilyInvalid(f"projector family violates invariants: {bad}")
    return defects


def _spectral_dpdt(w, V, Hdot):
    """Analytic first derivative of rank-1 spectral projectors.

    With ``F[m, n] = <m|Hdot|n> / (E_n - E_m)`` (zero on the diagonal) the
    parallel-gauge eigenvector velocity is ``|n'> = V F[:, n]``.
    """
    Hd = dagger(V) @ Hdot @ V
    eye = np.eye(w.shape[-1], dtype=bool)
    gap = np.where(eye, 1.0, w[..., None, :] - w[..., :, None])
    F = np.where(eye, 0.0, Hd / gap)
    ndot = V @ F
    # (..., n, d, d): |n'><n| + |n><n'|
    a = np.einsum("...in,...jn->...nij", ndot, V.conj())
    return a + dagger(a)


def spectral_projectors(frame: EigenFrame) -> ProjectorFamily:
    """Rank-1 eigenprojector family ``P_n = |n><n|`` of the frame's Hamiltonian.

    Off-grid times are handled by re-diagonalizing ``H(t)``; sectors are
    labelled by ascending energy, which coincides with the frame's
    continuity ordering on a gapped path.
    """
    H = frame.H
    d = H.dim
    if not np.all(np.diff(frame.energies, axis=1) > 0):
        raise FamilyInvalid("frame ordering departs from ascending energies (level crossing)")
    gap_tol = frame.gap_tol

    def eig(t):
        w, V = np.linalg.eigh(H(t))
        gaps = _min_gaps(w)
        if np.any(gaps < gap_tol):
            tt = np.broadcast_to(t, gaps.shape)
            k = np.unravel_index(np.argmin(gaps), gaps.shape)
            raise GapCollapse(tt[k], gaps[k])
        return w, V

    def func(t):
        _, V = eig(t)
        return np.einsum("...in,...jn->...nij", V, V.conj())

    deriv = None
    if H.derivative is not None:
        def deriv(t, order):
            if order != 1:
                return None
            w, V = eig(t)
            return _spectral_dpdt(w, V, H.dot(t))

    return ProjectorFamily(d, (1,) * d, func, deriv, H.T, None, f"spectral({H.name})", H)


def _fd_check(fam: ProjectorFamily, t, h):
    t = np.asarray(t, dtype=float)
    if np.any(t - h < -1e-15 * fam.T) or np.any(t + h > fam.T * (1 + 1e-15)):
        raise BoundaryStencil(f"stencil of half-width {h:g} leaves [0, {fam.T:g}] at t={t}")


def projector_derivative(fam: ProjectorFamily, t, order: int = 1, h: Optional[float] = None):
    """First or second time derivative of every projector in the family.

    Analytic callbacks are preferred.  A second derivative with only a first
    order callback available is obtained by central-differencing the analytic
    first derivative.  Otherwise the central stencils
    ``(P(t+h) - P(t-h)) / 2h`` and ``(P(t+h) - 2P(t) + P(t-h)) / h^2`` apply.
    """
    if order not in (1, 2):
        raise ValueError("order must be 1 or 2")
    h = fam.step if h is None else h
    if fam.derivative is not None:
        r = fam.derivative(np.asarray(t, dtype=float), order)
        if r is not None:
            return np.asarray(r, dtype=complex)
        if order == 2:
            first = fam.derivative(np.asarray(t, dtype=float), 1)
            if first is not None:
                _fd_check(fam, t, h)
                t = np.asarray(t, dtype=float)
                return (np.asarray(fam.derivative(t + h, 1)) - np.asarray(fam.derivative(t - h, 1))) / (2 * h)
    _fd_check(fam, t, h)
    t = np.asarray(t, dtype=float)
    if order == 1:
        return (fam(t + h) - fam(t - h)) / (2 * h)
    return (fam(t + h) - 2 * fam(t) + fam(t - h)) / h**2


def constant_family(Ps, T: float = 1.0) -> ProjectorFamily:
    Ps = np.asarray(Ps, dtype=complex)
    check_family(Ps)
    m, d, _ = Ps.shape
    ranks = tuple(int(round(np.trace(P).real)) for P in Ps)

    def func(t):
        return np.broadcast_to(Ps, np.shape(t) + Ps.shape).copy()

    def deriv(t, order):
        return np.zeros(np.shape(t) + Ps.shape, dtype=complex)

    return ProjectorFamily(d, ranks, func, deriv, T, None, "constant")


def random_anti_hermitian(rng: np.random.Generator, d: int, rate: float = 1.0):
    A = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    G = 0.5 * (A - A.conj().T)
    return rate * G / opnorm(G)


def rotated_family(P0s, G, T: float = 1.0, name: str = "rotated") -> ProjectorFamily:
    """Family ``P_n(t) = exp(tG) P_n(0) exp(-tG)`` for anti-Hermitian ``G``.

    Ranks are constant by construction and both derivatives are analytic:
    ``P' = [G, P]`` and ``P'' = [G, [G, P]]``.
    """
    P0s = np.asarray(P0s, dtype=complex)
    G = np.asarray(G, dtype=complex)
    d = G.shape[0]
    mu, U = np.linalg.eigh(1j * G)
    ranks = tuple(int(round(np.trace(P).real)) for P in P0s)

    def W(t):
        ph = np.exp(-1j * np.asarray(t)[..., None] * mu)
        return (U * ph[..., None, :]) @ U.conj().T

    def func(t):
        Wt = W(t)[..., None, :, :]
        return Wt @ P0s @ dagger(Wt)

    def deriv(t, order):
        P = func(t)
        D = G @ P - P @ G
        if order == 2:
            D = G @ D - D @ G
        return D

    return ProjectorFamily(d, ranks, func, deriv, T, None, name)


def random_smooth_family(rng: np.random.Generator, d: int, ranks: Sequence[int] = None,
                         rate: float = 1.0, T: float = 1.0) -> ProjectorFamily:
    """Random constant-rank family from a random basis split into ``ranks`` blocks."""
    if ranks is None:
        r = int(rng.integers(1, d))
        ranks = (r, d - r)
    if sum(ranks) != d or min(ranks) < 1:
        raise ValueError(f"ranks {ranks} do not partition dimension {d}")
    U = random_unitary(rng, d)
    P0s = []
    start = 0
    for r in ranks:
        cols = U[:, start:start + r]
        P0s.append(cols @ cols.conj().T)
        start += r
    return rotated_family(P0s, random_anti_hermitian(rng, d, rate), T, "random")
