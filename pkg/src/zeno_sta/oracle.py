"""Brute-force references: refined time-ordered propagation and channel tomography.

The propagator deliberately steps at interior quadrature points (midpoint, or
the two Gauss points of a fourth-order commutator-free Magnus scheme) so that
it never shares the left-endpoint freezing used by the stroboscopic simulator.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import NonConvergence
from .operators import OperatorSchedule, TimeGrid, matrix_exponential, opnorm

_CHUNK = 4096
_SQ3 = np.sqrt(3.0)
_GAUSS = (0.5 - _SQ3 / 6, 0.5 + _SQ3 / 6)
_CF4 = ((3 - 2 * _SQ3) / 12, (3 + 2 * _SQ3) / 12)


@dataclass(frozen=True)
class OracleConfig:
    R: int = 100
    order: int = 2
    tol: float = 1e-9

    def __post_init__(self):
        if self.R < 10:
            raise ValueError(f"oracle refinement R must be >= 10, got {self.R}")
        if self.order not in (2, 4):
            raise ValueError("oracle order must be 2 or 4")


def _step_unitaries(Hgen: OperatorSchedule, t0, h: float, order: int):
    """One-step propagators for steps starting at the times ``t0``."""
    if order == 2:
        return matrix_exponential(Hgen(t0 + 0.5 * h), -1j * h, hermitian=True)
    H1 = Hgen(t0 + _GAUSS[0] * h)
    H2 = Hgen(t0 + _GAUSS[1] * h)
    a1, a2 = _CF4
    first = matrix_exponential(a2 * H1 + a1 * H2, -1j * h, hermitian=True)
    second = matrix_exponential(a1 * H1 + a2 * H2, -1j * h, hermitian=True)
    return second @ first


def _propagate(Hgen, grid: TimeGrid, R: int, order: int, psi0=None):
    """Walk the refined grid; return the propagator (or state) at every coarse point."""
    fine = grid.refine(R)
    d = Hgen.dim
    cur = np.eye(d, dtype=complex) if psi0 is None else np.asarray(psi0, dtype=complex).copy()
    out = np.empty((grid.N + 1,) + cur.shape, dtype=complex)
    out[0] = cur
    starts = fine.times[:-1]
    for c0 in range(0, fine.N, _CHUNK):
        steps = _step_unitaries(Hgen, starts[c0:c0 + _CHUNK], fine.dt, order)
        for j, U in enumerate(steps):
            cur = U @ cur
            k = c0 + j + 1
            if k % R == 0:
                out[k // R] = cur
    return out


def reference_unitary(Hgen: OperatorSchedule, grid: TimeGrid, R: int = 100, order: int = 2,
                      tol: float = 1e-9, check: bool = True):
    """Time-ordered propagator ``U(T, 0)`` on an ``R``-fold refined grid.

    With ``check`` the computation is repeated at ``2R`` and
    :class:`NonConvergence` is raised if the two differ by more than ``tol``
    in operator norm; the finer result is returned.
    """
    OracleConfig(R, order, tol)
    if not Hgen.hermitian:
        raise ValueError("reference_unitary needs a Hermitian generator")
    U = _propagate(Hgen, grid, R, order)[-1]
    if not check:
        return U
    U2 = _propagate(Hgen, grid, 2 * R, order)[-1]
    diff = opnorm(U2 - U)
    if diff > tol:
        raise NonConvergence(f"refinement doubling changed U by {diff:.3e} > {tol:.1e}")
    return U2


def reference_states(Hgen: OperatorSchedule, grid: TimeGrid, psi0, R: int = 100, order: int = 2):
    """States ``U(t_k, 0) psi0`` at every point of the coarse grid."""
    OracleConfig(R, order)
    return _propagate(Hgen, grid, R, order, psi0=psi0)


def reference_propagators(Hgen: OperatorSchedule, grid: TimeGrid, R: int = 100, order: int = 2):
    OracleConfig(R, order)
    return _propagate(Hgen, grid, R, order)


def hermitian_basis(d: int):
    """Orthonormal (Hilbert-Schmidt) Hermitian operator basis with ``d^2`` elements."""
    basis = []
    for i in range(d):
        E = np.zeros((d, d), dtype=complex)
        E[i, i] = 1
        basis.append(E)
    s = 1 / np.sqrt(2)
    for i in range(d):
        for j in range(i + 1, d):
            E = np.zeros((d, d), dtype=complex)
            E[i, j] = E[j, i] = s
            basis.append(E)
            F = np.zeros((d, d), dtype=complex)
            F[i, j], F[j, i] = -1j * s, 1j * s
            basis.append(F)
    return np.array(basis)


def channel_tomography(channel_a: Callable, channel_b: Optional[Callable], d: int) -> float:
    """Max elementwise deviation of two linear maps over a complete operator basis.

    ``channel_b=None`` compares ``channel_a`` with itself (a determinism check).
    """
    if d > 16:
        raise ValueError("tomography is limited to d <= 16")
    channel_b = channel_a if channel_b is None else channel_b
    worst = 0.0
    for B in hermitian_basis(d):
        worst = max(worst, float(np.max(np.abs(channel_a(B) - channel_b(B)))))
    return worst
