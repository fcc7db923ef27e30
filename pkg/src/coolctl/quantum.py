"""Dense matrix utilities, the GKS-Lindblad right-hand side and a fixed-step
RK4 integrator for the fully controlled density-matrix dynamics.

Conventions: ``rho_dot = -i[H0 + H(t), rho] + sum_k D_{V_k}(rho)`` with
``D_V(rho) = V rho V^* - (V^*V rho + rho V^*V)/2``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

HERM_TOL = 1e-12
CLIP_TOL = 1e-10
POSITIVITY_TOL = 1e-6

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
SIGMA_MINUS = np.array([[0, 1], [0, 0]], dtype=complex)


class DimensionError(ValueError):
    pass


class PositivityError(RuntimeError):
    """Raised when an integrated state leaves the positive cone (dt too large)."""


def as_matrix(a, n: int | None = None) -> np.ndarray:
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {m.shape}")
    if n is not None and m.shape[0] != n:
        raise DimensionError(f"expected dimension {n}, got {m.shape[0]}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    return m


def dag(a: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(a, -1, -2))


def hermitize(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + dag(a))


def is_hermitian(a: np.ndarray, tol: float = HERM_TOL) -> bool:
    return bool(np.max(np.abs(a - dag(a)), initial=0.0) <= tol)


def commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b - b @ a


def basis_op(i: int, j: int, n: int) -> np.ndarray:
    """Matrix unit |i><j| (zero-based indices)."""
    e = np.zeros((n, n), dtype=complex)
    e[i, j] = 1.0
    return e


def check_density(rho: np.ndarray, tol: float = HERM_TOL) -> None:
    if not is_hermitian(rho, tol):
        raise ValueError("density matrix is not Hermitian")
    if abs(np.trace(rho) - 1.0) > tol:
        raise ValueError(f"density matrix has trace {np.trace(rho).real!r}")
    if np.linalg.eigvalsh(hermitize(rho))[0] < -CLIP_TOL:
        raise ValueError("density matrix is not positive semi-definite")


@dataclass
class LindbladSystem:
    """Drift Hamiltonian ``h0`` plus Lindblad terms ``V_k`` (rates absorbed)."""

    h0: np.ndarray
    terms: list[np.ndarray]
    name: str = ""

    def __post_init__(self):
        self.h0 = as_matrix(self.h0)
        n = self.h0.shape[0]
        if not is_hermitian(self.h0):
            raise ValueError("drift Hamiltonian must be Hermitian")
        if len(self.terms) < 1:
            raise ValueError("at least one Lindblad term is required")
        self.terms = [as_matrix(v, n) for v in self.terms]
        # cached pieces of the dissipator
        self._vdv = sum(dag(v) @ v for v in self.terms)

    @property
    def n(self) -> int:
        return self.h0.shape[0]

    @classmethod
    def from_terms(cls, terms: Sequence, h0=None, name: str = "") -> "LindbladSystem":
        terms = [as_matrix(v) for v in terms]
        n = terms[0].shape[0]
        if h0 is None:
            h0 = np.zeros((n, n), dtype=complex)
        return cls(h0=h0, terms=terms, name=name)

    def dissipative_part(self, rho: np.ndarray) -> np.ndarray:
        """``sum_k D_{V_k}(rho)`` without the Hamiltonian commutator."""
        out = -0.5 * (self._vdv @ rho + rho @ self._vdv)
        for v in self.terms:
            out = out + v @ rho @ dag(v)
        return out


def dissipator(v, rho) -> np.ndarray:
    """Return ``-Gamma_V(rho) = V rho V^* - (V^*V rho + rho V^*V)/2``."""
    v = as_matrix(v)
    rho = as_matrix(rho)
    if v.shape != rho.shape:
        raise DimensionError(f"dimension mismatch {v.shape} vs {rho.shape}")
    vdv = dag(v) @ v
    return v @ rho @ dag(v) - 0.5 * (vdv @ rho + rho @ vdv)


def lindblad_rhs(sys: LindbladSystem, rho, h_extra=None) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (sys.n, sys.n):
        raise DimensionError(f"state has shape {rho.shape}, system has n={sys.n}")
    h = sys.h0 if h_extra is None else sys.h0 + h_extra
    if h.shape != rho.shape:
        raise DimensionError("control Hamiltonian dimension mismatch")
    return -1j * commutator(h, rho) + sys.dissipative_part(rho)


@dataclass
class ControlSchedule:
    """Extra (control) Hamiltonian as a function of time.

    Either piecewise constant (``hamiltonians[k]`` acts on
    ``[times[k], times[k+1])``) or given by ``func(t)``.
    """

    times: np.ndarray | None = None
    hamiltonians: np.ndarray | None = None
    func: Callable[[float], np.ndarray] | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.func is None:
            if self.times is None or self.hamiltonians is None:
                raise ValueError("need either func or (times, hamiltonians)")
            self.times = np.asarray(self.times, dtype=float)
            self.hamiltonians = np.asarray(self.hamiltonians, dtype=complex)
            if np.any(np.diff(self.times) <= 0):
                raise ValueError("schedule grid must be strictly increasing")
            if len(self.hamiltonians) != len(self.times) - 1:
                raise ValueError("need one Hamiltonian per grid interval")
            if not all(is_hermitian(h, 1e-10) for h in self.hamiltonians):
                raise ValueError("schedule contains non-Hermitian samples")

    @classmethod
    def zero(cls, n: int) -> "ControlSchedule":
        z = np.zeros((n, n), dtype=complex)
        return cls(func=lambda t: z)

    def __call__(self, t: float) -> np.ndarray:
        if self.func is not None:
            return self.func(t)
        k = int(np.searchsorted(self.times, t, side="right")) - 1
        k = min(max(k, 0), len(self.hamiltonians) - 1)
        return self.hamiltonians[k]

    def step_hamiltonian(self, t: float, dt: float) -> np.ndarray | None:
        """Hamiltonian held over ``[t, t+dt]`` when the step sits in one interval."""
        if self.func is not None:
            return None
        return self(t + 0.5 * dt)


def _normalize_state(rho: np.ndarray) -> np.ndarray:
    rho = hermitize(rho)
    return rho / np.trace(rho).real


def integrate_full(sys: LindbladSystem, rho0, ctrl: ControlSchedule | None,
                   t_end: float, dt: float, check_every: int = 1):
    """Classical RK4 for the controlled Lindblad equation.

    Returns ``(times, states)`` with ``states`` of shape ``(len(times), n, n)``.
    A piecewise-constant schedule is sampled at the step midpoint and held over
    the whole step, so its grid should be a coarsening of the step grid.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    if t_end < 0:
        raise ValueError("t_end must be non-negative")
    rho = _normalize_state(as_matrix(rho0, sys.n))
    check_density(rho, 1e-9)
    if ctrl is None:
        ctrl = ControlSchedule.zero(sys.n)
    nsteps = int(np.ceil(t_end / dt - 1e-9))
    times = np.linspace(0.0, t_end, nsteps + 1) if nsteps else np.array([0.0])
    states = np.empty((len(times), sys.n, sys.n), dtype=complex)
    states[0] = rho
    for k in range(nsteps):
        t, h = times[k], times[k + 1] - times[k]
        held = ctrl.step_hamiltonian(t, h)
        if held is not None:
            h0 = h1 = h2 = held
        else:
            h0, h1, h2 = ctrl(t), ctrl(t + 0.5 * h), ctrl(t + h)
        k1 = lindblad_rhs(sys, rho, h0)
        k2 = lindblad_rhs(sys, rho + 0.5 * h * k1, h1)
        k3 = lindblad_rhs(sys, rho + 0.5 * h * k2, h1)
        k4 = lindblad_rhs(sys, rho + h * k3, h2)
        rho = _normalize_state(rho + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4))
        if check_every and k % check_every == 0:
            lo = np.linalg.eigvalsh(rho)[0]
            if lo < -POSITIVITY_TOL:
                raise PositivityError(
                    f"min eigenvalue {lo:.3e} at t={times[k + 1]:.6g}; reduce dt (={dt:g})")
        states[k + 1] = rho
    return times, states


def spectrum_desc(rho) -> np.ndarray:
    """Eigenvalues in non-increasing order, clipped to [0, 1] and renormalized."""
    rho = hermitize(np.asarray(rho, dtype=complex))
    w = np.linalg.eigvalsh(rho)
    if w[0] < -CLIP_TOL:
        raise ValueError(f"state has eigenvalue {w[0]:.3e} below clipping tolerance")
    # eigvalsh returns ascending order; reversing keeps ties index-stable
    w = np.clip(w[::-1], 0.0, 1.0)
    return w / w.sum()
