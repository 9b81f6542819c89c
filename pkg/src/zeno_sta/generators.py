"""Effective Zeno generators and leakage operators.

Conventions: ``P`` is a projector, ``Pdot`` its time derivative and
``Q = I - P``.  All functions accept single matrices; the schedule builders
at the bottom broadcast over arrays of times.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .errors import FamilyInvalid, GapCollapse, NotAProjector, UnitarityLoss
from .operators import (OperatorSchedule, TimeGrid, commutator, dagger,
                        matrix_exponential, opnorm)
from .spectral import (EigenFrame, ProjectorFamily, _min_gaps, check_family,
                       projector_derivative)

PROJECTOR_TOL = 1e-8


def _check_projector(P, tol=PROJECTOR_TOL):
    P = np.asarray(P, dtype=complex)
    err = opnorm(P @ P - P)
    if err > tol or opnorm(P - dagger(P)) > tol:
        raise NotAProjector(f"||P^2 - P|| = {err:.2e}")
    return P


def kato_avron_hamiltonian(H, P, Pdot):
    """``P H P + i [Pdot, P]``: projected Hamiltonian plus parallel-transport term."""
    P = _check_projector(P)
    return P @ H @ P + 1j * commutator(Pdot, P)


def multi_sector_zeno_hamiltonian(H, Ps, Pdots, tol: float = PROJECTOR_TOL):
    """``sum_n P_n H P_n + i K`` for a complete family, ``K`` from :func:`transport_generator`."""
    Ps = np.asarray(Ps, dtype=complex)
    check_family(Ps, tol)
    Pdots = np.asarray(Pdots, dtype=complex)
    pinched = np.einsum("nij,jk,nkl->il", Ps, H, Ps)
    return pinched + 1j * transport_generator(Ps, Pdots, check=False)


def pinched_off_block_norm(H, Ps) -> float:
    """Largest ``||P_n (sum_k P_k H P_k) P_m||`` over ``n != m``."""
    Ps = np.asarray(Ps)
    pinched = np.einsum("nij,jk,nkl->il", Ps, H, Ps)
    worst = 0.0
    for n in range(len(Ps)):
        for m in range(len(Ps)):
            if n != m:
                worst = max(worst, opnorm(Ps[n] @ pinched @ Ps[m]))
    return worst


def transport_generator(Ps, Pdots, check: bool = True):
    """Anti-Hermitian transport generator ``K = sum_n Pdot_n P_n``.

    For a complete family this equals ``(1/2) sum_n [Pdot_n, P_n]``; the
    unhalved commutator sum would move every projector twice as fast.  It
    satisfies ``[K, P_n] = Pdot_n`` for every sector, and for the pair
    ``{P, I - P}`` it reduces to Kato's ``[Pdot, P]``.
    """
    Ps = np.asarray(Ps, dtype=complex)
    Pdots = np.asarray(Pdots, dtype=complex)
    if check:
        check_family(Ps)
    K = np.sum(Pdots @ Ps, axis=-3)
    return 0.5 * (K - dagger(K))


def _gauge_potential(w, V, Hdot):
    """CD term ``i sum_n sum_{m != n} |m><m|Hdot|n><n| / (E_n - E_m)`` in stacks."""
    Hd = dagger(V) @ Hdot @ V
    eye = np.eye(w.shape[-1], dtype=bool)
    gap = np.where(eye, 1.0, w[..., None, :] - w[..., :, None])
    F = np.where(eye, 0.0, Hd / gap)
    return 1j * V @ F @ dagger(V)


def _eig_checked(H, t, gap_tol):
    w, V = np.linalg.eigh(H(t))
    gaps = _min_gaps(w)
    if np.any(gaps < gap_tol):
        tt = np.broadcast_to(np.asarray(t, dtype=float), gaps.shape)
        k = np.unravel_index(np.argmin(gaps), gaps.shape)
        raise GapCollapse(tt[k], gaps[k])
    return w, V


def cd_term(frame: EigenFrame, t, method: str = "auto"):
    """Counterdiabatic term ``A = i sum_n (|n'><n| - <n|n'> |n><n|)``.

    ``method="analytic"`` uses first-order perturbation theory for ``|n'>``
    (requires an analytic ``H'``); ``method="fd"`` central-differences the
    eigenvectors after aligning their phases with those at ``t``.  ``auto``
    picks analytic when possible.  ``t`` may be an array.
    """
    H = frame.H
    if method == "auto":
        method = "analytic" if H.derivative is not None else "fd"
    t = np.asarray(t, dtype=float)
    w, V = _eig_checked(H, t, frame.gap_tol)
    if method == "analytic":
        return _gauge_potential(w, V, H.dot(t))
    if method != "fd":
        raise ValueError(f"unknown method {method!r}")
    h = 1e-5 * H.T

    def aligned(s):
        _, Vs = _eig_checked(H, s, frame.gap_tol)
        ov = np.einsum("...in,...in->...n", V.conj(), Vs)
        return Vs * (np.abs(ov) / ov)[..., None, :]

    ndot = (aligned(t + h) - aligned(t - h)) / (2 * h)
    berry = np.einsum("...in,...in->...n", V.conj(), ndot)
    A = np.einsum("...in,...jn->...ij", ndot, V.conj())
    A = A - np.einsum("...n,...in,...jn->...ij", berry, V, V.conj())
    return 1j * A


def cd_hamiltonian(frame: EigenFrame, method: str = "auto") -> OperatorSchedule:
    """Schedule ``H(t) + A(t)`` generating transitionless driving."""
    H = frame.H
    return OperatorSchedule(H.dim, lambda t: H(t) + cd_term(frame, t, method), None,
                            T=H.T, hermitian=True, name=f"cd({H.name})")


def adiabatic_phases(frame: EigenFrame):
    """Phases ``exp(-i int E_n ds - int <n|n'> ds)`` on the frame's grid.

    Under ``H + A`` the state started in ``|n(0)>`` is ``phase_n(t) |n(t)>``.
    The dynamical part uses the trapezoid rule; the geometric part is the
    discrete connection ``prod_k <n_k|n_{k+1}>^* / |<n_k|n_{k+1}>|``, which is
    trivial in the parallel-transport gauge but kept so other gauges work.
    Shape ``(N+1, d)``.
    """
    E = frame.energies
    t = frame.times
    dyn = np.concatenate([np.zeros((1, E.shape[1])),
                          np.cumsum(0.5 * (E[1:] + E[:-1]) * np.diff(t)[:, None], axis=0)])
    ov = np.einsum("kin,kin->kn", frame.vectors[:-1].conj(), frame.vectors[1:])
    geo = np.concatenate([np.ones((1, E.shape[1])), np.cumprod(ov.conj() / np.abs(ov), axis=0)])
    return np.exp(-1j * dyn) * geo


def zeno_hamiltonian(H: OperatorSchedule, fam: ProjectorFamily, sector: Optional[int] = None) -> OperatorSchedule:
    """Schedule for the effective Zeno Hamiltonian.

    ``sector=None`` gives the multi-sector generator for the whole family;
    an integer gives the single-projector Kato-Avron form for that sector.
    """
    d = H.dim

    def func(t):
        Ps = fam(t)
        Pd = projector_derivative(fam, t, 1)
        if sector is not None:
            P, D = Ps[..., sector, :, :], Pd[..., sector, :, :]
            return P @ H(t) @ P + 1j * (D @ P - P @ D)
        Ht = H(t)[..., None, :, :]
        return np.sum(Ps @ Ht @ Ps, axis=-3) + 1j * transport_generator(Ps, Pd, check=False)

    label = "all" if sector is None else str(sector)
    return OperatorSchedule(d, func, None, T=H.T, hermitian=True, name=f"HZ[{label}]({H.name})")


@dataclass(frozen=True)
class Intertwiner:
    grid: TimeGrid
    W: np.ndarray

    def __getitem__(self, k):
        return self.W[k]

    def unitarity_defect(self) -> float:
        eye = np.eye(self.W.shape[-1])
        return max(opnorm(w.conj().T @ w - eye) for w in self.W)


def evolve_intertwiner(fam: ProjectorFamily, grid: TimeGrid, tol: float = 1e-6) -> Intertwiner:
    """Integrate ``W' = K W`` with ``W(0) = I`` by midpoint exponentials."""
    mids = grid.midpoints
    K = transport_generator(fam(mids), projector_derivative(fam, mids, 1), check=False)
    steps = matrix_exponential(1j * K, -1j * grid.dt, hermitian=True)
    d = fam.dim
    W = np.empty((grid.N + 1, d, d), dtype=complex)
    W[0] = np.eye(d)
    for k in range(grid.N):
        W[k + 1] = steps[k] @ W[k]
    out = Intertwiner(grid, W)
    defect = opnorm(W[-1].conj().T @ W[-1] - np.eye(d))
    if defect > tol:
        raise UnitarityLoss(f"||W^dag W - I|| = {defect:.2e}; refine the grid")
    return out


def gamma_dt(H, P, Pdot):
    """Finite-step leakage operator ``2 (P H Q H P + P Pdot Pdot P)``."""
    P = _check_projector(P)
    Q = np.eye(P.shape[0]) - P
    return 2 * (P @ H @ Q @ H @ P + P @ Pdot @ Pdot @ P)


def gamma_kappa(H, P, Pdot):
    """Absorber leakage operator ``2 P (H + A) Q (H + A) P`` with ``A = i[Pdot, P]``."""
    P = _check_projector(P)
    Q = np.eye(P.shape[0]) - P
    G = H + 1j * commutator(Pdot, P)
    return 2 * P @ G @ Q @ G @ P


class CrossTerm(NamedTuple):
    matrix: np.ndarray
    bound_holds: bool
    lhs: float
    rhs: float


def gamma_cross_and_bound(H, P, Pdot, slack: float = 1e-10) -> CrossTerm:
    """Cross term ``2i (P H Q Pdot P - P Pdot Q H P)`` and its norm bound.

    ``rhs = 4 ||Q H P|| ||Q Pdot P||``.
    """
    P = _check_projector(P)
    Q = np.eye(P.shape[0]) - P
    X = 2j * (P @ H @ Q @ Pdot @ P - P @ Pdot @ Q @ H @ P)
    lhs = opnorm(X)
    rhs = 4 * opnorm(Q @ H @ P) * opnorm(Q @ Pdot @ P)
    return CrossTerm(X, bool(lhs <= rhs + slack), lhs, rhs)


@dataclass(frozen=True)
class ZenoGenerators:
    H_Z: np.ndarray
    A: np.ndarray
    K: np.ndarray
    gamma_dt: np.ndarray
    gamma_kappa: np.ndarray
    gamma_cross: np.ndarray


def zeno_generators(H, P, Pdot) -> ZenoGenerators:
    """Every generator attached to a single monitored projector at one instant."""
    K = commutator(Pdot, P)
    return ZenoGenerators(
        H_Z=kato_avron_hamiltonian(H, P, Pdot),
        A=1j * K,
        K=K,
        gamma_dt=gamma_dt(H, P, Pdot),
        gamma_kappa=gamma_kappa(H, P, Pdot),
        gamma_cross=gamma_cross_and_bound(H, P, Pdot).matrix,
    )


def generators_at(H: OperatorSchedule, fam: ProjectorFamily, t: float, sector: int = 0) -> ZenoGenerators:
    P = fam(t)[sector]
    D = projector_derivative(fam, t, 1)[sector]
    return zeno_generators(H(t), P, D)


def check_generators(g: ZenoGenerators, tol: float = 1e-9):
    """Raise when a bundle breaks Hermiticity or positivity invariants."""
    if opnorm(g.H_Z - dagger(g.H_Z)) > 1e-10:
        raise FamilyInvalid("H_Z is not Hermitian")
    if opnorm(g.K + dagger(g.K)) > 1e-10:
        raise FamilyInvalid("K is not anti-Hermitian")
    for name in ("gamma_dt", "gamma_kappa"):
        M = getattr(g, name)
        if np.linalg.eigvalsh(0.5 * (M + dagger(M))).min() < -tol:
            raise FamilyInvalid(f"{name} is not positive semidefinite")


@dataclass(frozen=True)
class IdentityReport:
    count: int
    ppp_max: float
    second_order_max: float
    decomposition_max: float
    bound_violations: int
    bound_ratio_max: float

    def passed(self, tol: float = 1e-10, rel_tol: float = 1e-12) -> dict:
        return {
            "ppp": self.ppp_max <= tol,
            "second_order": self.second_order_max <= tol,
            "decomposition": self.decomposition_max <= rel_tol,
            "cross_bound": self.bound_violations == 0,
        }


def identity_suite(rng: np.random.Generator, count: int = 1000, dims=range(2, 9)) -> IdentityReport:
    """Check the projector and leakage identities on random smooth families.

    For each sample a random constant-rank family (analytic derivatives), a
    random Hermitian ``H`` and a random time are drawn; the first sector is
    tested.  ``decomposition_max`` is relative to ``||Gamma_kappa||``.
    """
    from .operators import random_hermitian
    from .spectral import random_smooth_family

    dims = list(dims)
    ppp = second = decomp = ratio = 0.0
    violations = 0
    for _ in range(count):
        d = int(rng.choice(dims))
        fam = random_smooth_family(rng, d, rate=float(rng.uniform(0.2, 3.0)))
        t = float(rng.uniform(0.0, fam.T))
        P = fam(t)[0]
        D1 = projector_derivative(fam, t, 1)[0]
        D2 = projector_derivative(fam, t, 2)[0]
        H = random_hermitian(rng, d, scale=float(rng.uniform(0.1, 5.0)))
        ppp = max(ppp, opnorm(P @ D1 @ P))
        second = max(second, opnorm(P @ D2 @ P + 2 * P @ D1 @ D1 @ P))
        gk = gamma_kappa(H, P, D1)
        cross = gamma_cross_and_bound(H, P, D1)
        decomp = max(decomp, opnorm(gk - gamma_dt(H, P, D1) - cross.matrix) / max(opnorm(gk), 1e-300))
        violations += not cross.bound_holds
        if cross.rhs > 0:
            ratio = max(ratio, cross.lhs / cross.rhs)
    return IdentityReport(count, ppp, second, decomp, violations, ratio)
