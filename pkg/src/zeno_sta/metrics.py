"""State functionals and the pinching channel."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import InvalidDensityMatrix
from .operators import dagger, opnorm

PSD_CLIP = 1e-9


def as_density(state):
    """Density matrix from either a ket (1-D) or a density matrix (2-D)."""
    state = np.asarray(state, dtype=complex)
    if state.ndim == 1:
        return np.outer(state, state.conj())
    return state


def check_density(rho, trace: Optional[float] = 1.0, tol: float = 1e-9):
    """Validate Hermiticity, trace and positivity; return the matrix as complex array."""
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise InvalidDensityMatrix(f"expected square matrix, got shape {rho.shape}")
    if not np.all(np.isfinite(rho)):
        raise InvalidDensityMatrix("non-finite entries")
    if opnorm(rho - dagger(rho)) > 1e-10 * max(1.0, opnorm(rho)):
        raise InvalidDensityMatrix("not Hermitian")
    if trace is not None and abs(np.trace(rho).real - trace) > 1e-8:
        raise InvalidDensityMatrix(f"trace {np.trace(rho).real:.12g} != {trace}")
    if np.linalg.eigvalsh(rho).min() < -tol:
        raise InvalidDensityMatrix("negative eigenvalue")
    return rho


def _psd_eigs(rho):
    w, V = np.linalg.eigh(0.5 * (rho + dagger(rho)))
    if w.min() < -PSD_CLIP:
        raise InvalidDensityMatrix(f"eigenvalue {w.min():.3e} below clipping threshold")
    return np.clip(w, 0.0, None), V


def sqrtm_psd(rho):
    w, V = _psd_eigs(rho)
    return (V * np.sqrt(w)) @ V.conj().T


def purity(rho) -> float:
    rho = check_density(rho, trace=None)
    return float(np.real(np.trace(rho @ rho)))


def von_neumann_entropy(rho) -> float:
    """Entropy in nats; eigenvalues below 1e-14 count as zero."""
    rho = check_density(rho, trace=None)
    w, _ = _psd_eigs(rho)
    w = w[w > 1e-14]
    return float(-np.sum(w * np.log(w)))


def fidelity(rho, sigma) -> float:
    """Uhlmann fidelity ``(tr sqrt(sqrt(rho) sigma sqrt(rho)))^2``; kets are accepted."""
    rho, sigma = np.asarray(rho), np.asarray(sigma)
    if rho.ndim == 1 and sigma.ndim == 1:
        return float(abs(np.vdot(rho, sigma)) ** 2)
    if rho.ndim == 1:
        return float(np.real(np.vdot(rho, as_density(sigma) @ rho)))
    if sigma.ndim == 1:
        return float(np.real(np.vdot(sigma, as_density(rho) @ sigma)))
    s = sqrtm_psd(check_density(rho, trace=None))
    inner = s @ check_density(sigma, trace=None) @ s
    w, _ = _psd_eigs(inner)
    return float(np.sum(np.sqrt(w)) ** 2)


def trace_distance(rho, sigma) -> float:
    diff = as_density(rho) - as_density(sigma)
    return float(0.5 * np.sum(np.abs(np.linalg.eigvalsh(0.5 * (diff + dagger(diff))))))


def pinching(rho, Ps):
    """``sum_n P_n rho P_n`` without validation (works on any operator)."""
    Ps = np.asarray(Ps)
    return np.einsum("nij,jk,nkl->il", Ps, rho, Ps)


@dataclass(frozen=True)
class ChannelResult:
    output: np.ndarray
    purity_before: float
    purity_after: float
    entropy_before: float
    entropy_after: float
    weights: np.ndarray


def pinch(rho, Ps) -> ChannelResult:
    """Apply the pinching channel for the PVM ``Ps`` and report purity/entropy change."""
    rho = check_density(rho)
    out = pinching(rho, Ps)
    weights = np.real(np.einsum("nij,ji->n", np.asarray(Ps), rho))
    res = ChannelResult(out, purity(rho), purity(out), von_neumann_entropy(rho),
                        von_neumann_entropy(out), weights)
    if abs(np.trace(out).real - np.trace(rho).real) > 1e-12 * max(1.0, rho.shape[0]):
        raise InvalidDensityMatrix("pinching failed to preserve the trace; family incomplete?")
    return res
