"""Dense complex-matrix backbone.

Everything here works on plain ``numpy`` arrays.  Matrices are ``(d, d)``
complex arrays and most helpers also accept stacks ``(..., d, d)`` so that
schedules can be evaluated on a whole time grid at once.  Units have
hbar = 1; times and energies are dimensionless.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
import scipy.linalg

from .errors import DimMismatch, MissingParam, NonFiniteInput, UnknownModel

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
IDENTITY_2 = np.eye(2, dtype=complex)


def dagger(A):
    return np.swapaxes(np.conj(A), -1, -2)


def opnorm(A) -> float:
    """Operator (spectral) norm: largest singular value."""
    A = np.asarray(A)
    if A.ndim == 1:
        return float(np.linalg.norm(A))
    return float(np.linalg.norm(A, 2))


def hermitian_part(A):
    return 0.5 * (A + dagger(A))


def is_hermitian(A, rtol: float = 1e-12) -> bool:
    A = np.asarray(A)
    scale = max(opnorm(A), 1.0)
    return opnorm(A - dagger(A)) <= rtol * scale


def _check_finite(A):
    if not np.all(np.isfinite(A)):
        raise NonFiniteInput("matrix contains NaN or Inf entries")


def matrix_exponential(A, scale: complex = 1.0, hermitian: Optional[bool] = None):
    """Return ``exp(scale * A)``.

    Hermitian input (flagged, or detected when ``hermitian`` is None) goes
    through an eigendecomposition, which keeps ``exp(-i H dt)`` unitary to
    machine precision.  Anything else uses scipy's scaling-and-squaring Pade
    routine.  Stacks of matrices ``(..., d, d)`` are accepted.
    """
    A = np.asarray(A, dtype=complex)
    _check_finite(A)
    if not np.isfinite(scale):
        raise NonFiniteInput("non-finite scale")
    if A.ndim < 2 or A.shape[-1] != A.shape[-2]:
        raise DimMismatch(f"expected square matrix, got shape {A.shape}")
    if hermitian is None:
        hermitian = bool(np.all(np.abs(A - dagger(A)) <= 1e-14 * max(np.abs(A).max(initial=0.0), 1.0)))
    if hermitian:
        w, V = np.linalg.eigh(hermitian_part(A))
        phases = np.exp(scale * w)
        return (V * phases[..., None, :]) @ dagger(V)
    return scipy.linalg.expm(scale * A)


def unitary_steps(H, dt: float):
    """``exp(-i H dt)`` for a stack of Hermitian matrices."""
    return matrix_exponential(H, -1j * dt, hermitian=True)


def commutator(A, B):
    A = np.asarray(A)
    B = np.asarray(B)
    if A.shape[-2:] != B.shape[-2:]:
        raise DimMismatch(f"shapes {A.shape} and {B.shape} do not match")
    return A @ B - B @ A


def anticommutator(A, B):
    A = np.asarray(A)
    B = np.asarray(B)
    if A.shape[-2:] != B.shape[-2:]:
        raise DimMismatch(f"shapes {A.shape} and {B.shape} do not match")
    return A @ B + B @ A


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid ``t_k = k T / N`` for ``k = 0..N``.

    Points are built from integers so that ``times[-1] == T`` exactly.
    """

    T: float
    N: int

    def __post_init__(self):
        if not (self.T > 0 and np.isfinite(self.T)):
            raise ValueError(f"T must be positive, got {self.T}")
        if int(self.N) != self.N or self.N < 1:
            raise ValueError(f"N must be a positive integer, got {self.N}")
        object.__setattr__(self, "N", int(self.N))

    @property
    def dt(self) -> float:
        return self.T / self.N

    @property
    def times(self):
        return self.T * (np.arange(self.N + 1) / self.N)

    @property
    def midpoints(self):
        return self.T * ((2 * np.arange(self.N) + 1) / (2 * self.N))

    def refine(self, factor: int) -> "TimeGrid":
        return TimeGrid(self.T, self.N * int(factor))


@dataclass(frozen=True)
class OperatorSchedule:
    """A time-dependent operator ``t -> (d, d)`` on ``[0, T]``.

    ``func`` must broadcast: given an array of times of shape ``s`` it returns
    an array of shape ``s + (d, d)``.  ``derivative`` follows the same
    convention and is optional.
    """

    dim: int
    func: Callable
    derivative: Optional[Callable] = None
    T: float = 1.0
    hermitian: bool = True
    name: str = ""

    def __call__(self, t):
        return np.asarray(self.func(np.asarray(t, dtype=float)), dtype=complex)

    def dot(self, t, h: Optional[float] = None):
        """Time derivative, analytic when available, else central difference."""
        t = np.asarray(t, dtype=float)
        if self.derivative is not None:
            return np.asarray(self.derivative(t), dtype=complex)
        h = 1e-5 * self.T if h is None else h
        return (self(t + h) - self(t - h)) / (2 * h)

    def shifted(self, other: "OperatorSchedule", name: str = "") -> "OperatorSchedule":
        """Pointwise sum of two schedules (derivatives combined when both exist)."""
        if other.dim != self.dim:
            raise DimMismatch(f"dims {self.dim} and {other.dim}")
        deriv = None
        if self.derivative is not None and other.derivative is not None:
            deriv = lambda t: self.dot(t) + other.dot(t)  # noqa: E731
        return OperatorSchedule(
            self.dim,
            lambda t: self(t) + other(t),
            deriv,
            T=self.T,
            hermitian=self.hermitian and other.hermitian,
            name=name or f"{self.name}+{other.name}",
        )


def constant_schedule(H, T: float = 1.0, name: str = "constant") -> OperatorSchedule:
    H = np.asarray(H, dtype=complex)
    _check_finite(H)
    d = H.shape[0]

    def func(t):
        return np.broadcast_to(H, np.shape(t) + (d, d)).copy()

    def deriv(t):
        return np.zeros(np.shape(t) + (d, d), dtype=complex)

    return OperatorSchedule(d, func, deriv, T=T, hermitian=is_hermitian(H), name=name)


# ---------------------------------------------------------------------------
# model library


@dataclass(frozen=True)
class ModelSpec:
    name: str
    params: dict = field(default_factory=dict)


MODEL_PARAMS = {
    "rotating-qubit": {"required": ("omega", "T"), "optional": {}},
    "landau-zener": {"required": ("v", "Delta", "T"), "optional": {}},
    "three-level": {"required": ("omega", "T"), "optional": {"alpha": 0.25}},
    "tfim": {
        "required": ("L", "J", "h_start", "h_end", "T"),
        "optional": {"g": 0.0, "shape": "linear"},
    },
}


def _col(x):
    return np.asarray(x)[..., None, None]


def spin1_matrices():
    """Spin-1 ``(Jx, Jy, Jz)`` in the ``m = +1, 0, -1`` basis."""
    s = 1 / np.sqrt(2)
    jx = np.array([[0, s, 0], [s, 0, s], [0, s, 0]], dtype=complex)
    jy = np.array([[0, -1j * s, 0], [1j * s, 0, -1j * s], [0, 1j * s, 0]], dtype=complex)
    jz = np.diag([1.0, 0.0, -1.0]).astype(complex)
    return jx, jy, jz


def _rotating_qubit(omega, T):
    rate = 0.5 * np.pi / T

    def func(t):
        th = rate * t
        return 0.5 * omega * (_col(np.cos(th)) * SIGMA_Z + _col(np.sin(th)) * SIGMA_X)

    def deriv(t):
        th = rate * t
        return 0.5 * omega * rate * (-_col(np.sin(th)) * SIGMA_Z + _col(np.cos(th)) * SIGMA_X)

    return OperatorSchedule(2, func, deriv, T=T, name="rotating-qubit")


def _landau_zener(v, Delta, T):
    def func(t):
        return 0.5 * v * _col(t - 0.5 * T) * SIGMA_Z + 0.5 * Delta * SIGMA_X

    def deriv(t):
        return np.broadcast_to(0.5 * v * SIGMA_Z, np.shape(t) + (2, 2)).copy()

    return OperatorSchedule(2, func, deriv, T=T, name="landau-zener")


def _three_level(omega, T, alpha):
    jx, _, jz = spin1_matrices()
    rate = 0.5 * np.pi / T

    def func(t):
        th = rate * t
        nj = _col(np.cos(th)) * jz + _col(np.sin(th)) * jx
        return omega * nj + alpha * nj @ nj

    def deriv(t):
        th = rate * t
        nj = _col(np.cos(th)) * jz + _col(np.sin(th)) * jx
        dnj = rate * (-_col(np.sin(th)) * jz + _col(np.cos(th)) * jx)
        return omega * dnj + alpha * (dnj @ nj + nj @ dnj)

    return OperatorSchedule(3, func, deriv, T=T, name="three-level")


def _kron_site(op, site, L):
    out = np.array([[1.0 + 0j]])
    for j in range(L):
        out = np.kron(out, op if j == site else IDENTITY_2)
    return out


def _tfim(L, J, h_start, h_end, T, g, shape):
    L = int(L)
    if L < 1 or 2**L > 64:
        raise ValueError(f"tfim needs 1 <= L <= 6, got L={L}")
    d = 2**L
    zz = np.zeros((d, d), dtype=complex)
    for i in range(L - 1):
        zz += _kron_site(SIGMA_Z, i, L) @ _kron_site(SIGMA_Z, i + 1, L)
    xs = sum(_kron_site(SIGMA_X, i, L) for i in range(L))
    zs = sum(_kron_site(SIGMA_Z, i, L) for i in range(L))
    static = -J * zz - g * zs

    if shape == "linear":
        s, ds = (lambda u: u), (lambda u: np.ones_like(u))
    elif shape == "sin2":
        s = lambda u: np.sin(0.5 * np.pi * u) ** 2  # noqa: E731
        ds = lambda u: 0.5 * np.pi * np.sin(np.pi * u)  # noqa: E731
    else:
        raise ValueError(f"unknown schedule shape {shape!r}")

    def field_(t):
        return h_start + (h_end - h_start) * s(np.asarray(t) / T)

    def func(t):
        return static - _col(field_(t)) * xs

    def deriv(t):
        return -_col((h_end - h_start) * ds(np.asarray(t) / T) / T) * xs

    return OperatorSchedule(d, func, deriv, T=T, name="tfim")


def model_hamiltonian(spec: ModelSpec) -> OperatorSchedule:
    """Instantiate one of the concrete test Hamiltonians.

    * ``rotating-qubit``: ``(omega/2)(cos th sz + sin th sx)``, ``th = (pi/2) t/T``
    * ``landau-zener``: ``(v (t - T/2)/2) sz + (Delta/2) sx``
    * ``three-level``: spin-1 version of the rotating qubit,
      ``omega n.J + alpha (n.J)^2``
    * ``tfim``: open-chain transverse-field Ising model with a ramped field
      ``h(t)`` and optional longitudinal field ``g``.

    All schedules carry analytic derivatives.
    """
    try:
        info = MODEL_PARAMS[spec.name]
    except KeyError:
        raise UnknownModel(spec.name) from None
    params = dict(info["optional"])
    params.update(spec.params)
    for key in info["required"]:
        if key not in params:
            raise MissingParam(key)
    unknown = set(params) - set(info["required"]) - set(info["optional"])
    if unknown:
        raise ValueError(f"unknown parameters for {spec.name}: {sorted(unknown)}")
    p = params
    if spec.name == "rotating-qubit":
        return _rotating_qubit(float(p["omega"]), float(p["T"]))
    if spec.name == "landau-zener":
        return _landau_zener(float(p["v"]), float(p["Delta"]), float(p["T"]))
    if spec.name == "three-level":
        return _three_level(float(p["omega"]), float(p["T"]), float(p["alpha"]))
    return _tfim(p["L"], float(p["J"]), float(p["h_start"]), float(p["h_end"]),
                 float(p["T"]), float(p["g"]), p["shape"])


def random_hermitian(rng: np.random.Generator, d: int, scale: float = 1.0):
    A = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    H = 0.5 * (A + A.conj().T)
    return scale * H / opnorm(H)


def random_unitary(rng: np.random.Generator, d: int):
    A = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    Q, R = np.linalg.qr(A)
    return Q * (np.diag(R) / np.abs(np.diag(R)))
