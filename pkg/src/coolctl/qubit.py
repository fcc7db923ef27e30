"""Time-optimal cooling of a qubit with a single Lindblad term.

Every non-normal ``V`` is reduced to ``Vt = [[0, 1], [nu, 0]]`` with
``0 <= nu < 1`` by a Hamiltonian shift, a rate ``gamma`` and a frame change.
In that normal form the set of generators, the maximal eigenvalue derivative
``mu``, the optimal path ``(lam*, y*)`` and the control ``u_y`` are explicit.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .quantum import SIGMA_X, SIGMA_Y, ControlSchedule, LindbladSystem, as_matrix, commutator, dag
from .reduced import to_special


class NotCoolableError(ValueError):
    """The Lindblad term is normal, so no pure state is reachable."""


def v_tilde(nu: float) -> np.ndarray:
    return np.array([[0, 1], [nu, 0]], dtype=complex)


def _check_nu(nu: float) -> None:
    if not 0.0 <= nu < 1.0:
        raise ValueError(f"nu must lie in [0, 1), got {nu}")


@dataclass
class QubitNormalForm:
    nu: float
    gamma: float
    u_tilde: np.ndarray
    h_tilde: np.ndarray

    def residual(self, v) -> float:
        """Largest deviation of ``Gamma_V`` from ``i ad_H + gamma Gamma_{U^* Vt U}``
        over the Pauli basis of Hermitian 2x2 matrices."""
        v = as_matrix(v, 2)
        w = dag(self.u_tilde) @ v_tilde(self.nu) @ self.u_tilde
        err = 0.0
        for b in (np.eye(2), SIGMA_X, SIGMA_Y, np.diag([1.0, -1.0])):
            lhs = _gamma(v, b)
            rhs = 1j * commutator(self.h_tilde, b) + self.gamma * _gamma(w, b)
            err = max(err, float(np.max(np.abs(lhs - rhs))))
        return err


def _gamma(v, rho):
    # Gamma_V(rho) = (V^*V rho + rho V^*V)/2 - V rho V^*
    vdv = dag(v) @ v
    return 0.5 * (vdv @ rho + rho @ vdv) - v @ rho @ dag(v)


def normal_form(v) -> QubitNormalForm:
    v = as_matrix(v, 2)
    if np.linalg.norm(commutator(v, dag(v))) <= 1e-10:
        raise NotCoolableError("V is normal; the qubit system is not coolable")
    h_tilde = 0.25j * (np.trace(dag(v)) * v - np.trace(v) * dag(v))
    w = v - np.trace(v) / 2 * np.eye(2)
    _, evecs = np.linalg.eigh(commutator(w, dag(w)))
    u = dag(evecs)  # u [W, W^*] u^* is diagonal, u W u^* has zero diagonal
    m = u @ w @ dag(u)
    if abs(m[1, 0]) > abs(m[0, 1]):
        swap = np.array([[0, 1j], [1j, 0]])
        u = swap @ u
        m = swap @ m @ dag(swap)
    p, q = m[0, 1], m[1, 0]
    alpha = (np.angle(q) - np.angle(p)) / 4 if abs(q) > 0 else 0.0
    d = np.diag([np.exp(1j * alpha), np.exp(-1j * alpha)])
    u = to_special(d @ u)
    return QubitNormalForm(nu=float(abs(q) / abs(p)), gamma=float(abs(p) ** 2),
                           u_tilde=u, h_tilde=h_tilde)


class GeneratorPoint(NamedTuple):
    a: float  # J12 - J21
    b: float  # J12 + J21


def generator_point(j: np.ndarray) -> GeneratorPoint:
    return GeneratorPoint(j[0, 1] - j[1, 0], j[0, 1] + j[1, 0])


def q_point(nu: float, x, z):
    """Point of the space of generators reached by ``exp(i pi z sz) exp(i pi x sx)``."""
    _check_nu(nu)
    k = 1.0 - nu ** 2
    a = (1.0 - 2.0 * np.sin(np.pi * np.asarray(x)) ** 2) * k
    width = 0.5 * (1.0 + nu ** 2 - 2.0 * np.cos(4.0 * np.pi * np.asarray(z)) * nu)
    b = 1.0 + nu ** 2 - width * (1.0 - (a / k) ** 2)
    return GeneratorPoint(a, b)


def q_boundary(nu: float, a, branch: str):
    """Boundary parabola ``b = 1 + nu^2 - (1 +- nu)^2 (1 - (a/(1-nu^2))^2) / 2``.

    ``plus`` is the lower boundary, ``minus`` the upper one.
    """
    _check_nu(nu)
    a = np.asarray(a, dtype=float)
    k = 1.0 - nu ** 2
    if np.any(np.abs(a) > k + 1e-12):
        raise ValueError("|a| exceeds 1 - nu^2")
    sign = {"plus": 1.0, "minus": -1.0}[branch]
    return 1.0 + nu ** 2 - 0.5 * (1.0 + sign * nu) ** 2 * (1.0 - (a / k) ** 2)


def lambda_switch(nu: float) -> float:
    """Eigenvalue where the optimal generator leaves the corner of Q."""
    return 0.5 * (1.0 + (1.0 - nu) / (1.0 + nu))


def mu(nu: float, lam):
    """Maximal achievable derivative of the first eigenvalue."""
    _check_nu(nu)
    lam = np.asarray(lam, dtype=float)
    lam0 = lambda_switch(nu)
    m = 2.0 * lam - 1.0
    first = 0.5 * (1.0 - nu ** 2 - (1.0 + nu ** 2) * m)
    with np.errstate(divide="ignore", invalid="ignore"):
        second = ((1.0 - nu) / 2.0) ** 2 * (1.0 / m - m)
    out = np.where(lam <= lam0, first, second)
    return out if out.ndim else float(out)


def mu_branch(nu: float, lam) -> np.ndarray:
    return np.where(np.asarray(lam) <= lambda_switch(nu), 1, 2)


def switch_time(nu: float) -> float:
    """Time ``t0`` at which the optimal path reaches ``lambda_switch``."""
    _check_nu(nu)
    r = 1.0 - (1.0 + nu ** 2) / (1.0 + nu)
    if r <= 0.0:
        return float("inf")
    return -np.log(r) / (1.0 + nu ** 2)


def path_constant(nu: float) -> float:
    """Integration constant of the second branch, fixed by continuity at t0."""
    t0 = switch_time(nu)
    if not np.isfinite(t0):
        return float("nan")
    return 4.0 * nu / (1.0 + nu) ** 2 * np.exp((1.0 - nu) ** 2 * t0)


def opt_path(nu: float, t):
    """``(lam*, y*)`` at time(s) ``t``; ``lam*`` solves ``lam' = mu(lam)``, ``lam(0) = 0``."""
    _check_nu(nu)
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("t must be non-negative")
    t0, c = switch_time(nu), path_constant(nu)
    s = 1.0 + nu ** 2
    early = t <= t0
    lam = np.where(early, -np.expm1(-s * t) / s, 0.0)
    y = np.zeros_like(t)
    late = ~early
    if np.any(late):
        tl = t[late]
        m = np.sqrt(np.clip(1.0 - c * np.exp(-(1.0 - nu) ** 2 * tl), 0.0, None))
        lam[late] = 0.5 * (1.0 + m)
        y[late] = _y_of_m(nu, m)
    if lam.ndim == 0:
        return float(lam), float(y)
    return lam, y


def _y_of_m(nu: float, m):
    m0 = (1.0 - nu) / (1.0 + nu)
    arg = np.clip(0.5 * (1.0 - m0 / m), 0.0, 1.0)
    return np.arcsin(np.sqrt(arg)) / np.pi


def rotation(y) -> np.ndarray:
    """Frame ``exp(-i pi y sigma_y)`` carrying ``diag(lam, 1-lam)`` along the path."""
    th = np.pi * y
    return np.array([[np.cos(th), -np.sin(th)], [np.sin(th), np.cos(th)]], dtype=complex)


def u_y_terms(nu: float, t):
    """Direct and compensating parts of the optimal ``sigma_y`` control."""
    _check_nu(nu)
    t = np.asarray(t, dtype=float)
    t0 = switch_time(nu)
    direct = np.zeros_like(t)
    comp = np.zeros_like(t)
    late = t > t0
    if np.any(late):
        lam, y = opt_path(nu, t[late])
        lam, y = np.atleast_1d(lam), np.atleast_1d(y)
        m = 2.0 * lam - 1.0
        m0 = (1.0 - nu) / (1.0 + nu)
        with np.errstate(divide="ignore"):
            direct[late] = (m0 / m) / np.sqrt(m ** 2 - m0 ** 2) * mu(nu, lam)
        comp[late] = (1.0 + nu) * np.sin(2 * np.pi * y) / 4.0 * (
            2.0 * (1.0 - nu) / m - (1.0 + nu) * np.cos(2 * np.pi * y))
    direct[t == t0] = np.inf
    if direct.ndim == 0:
        return float(direct), float(comp)
    return direct, comp


def u_y_control(nu: float, t):
    """Optimal ``sigma_y`` control amplitude; ``inf`` exactly at the switch time."""
    d, c = u_y_terms(nu, t)
    return d + c


def y_limit(nu: float) -> float:
    return float(np.arcsin(np.sqrt(nu / (1.0 + nu))) / np.pi)


@dataclass
class QubitProtocol:
    """Control schedule plus the initial state it is designed for."""

    schedule: ControlSchedule
    rho0: np.ndarray
    form: QubitNormalForm

    def target_eigenvalue(self, t):
        """Planned first eigenvalue ``lam*(gamma t)`` in the rotated frame."""
        return opt_path(self.form.nu, self.form.gamma * np.asarray(t))[0]


def interval_controls(nu: float, edges) -> np.ndarray:
    """``sigma_y`` amplitude held on each interval of ``edges`` (normal-form time).

    The direct part is averaged exactly (``pi * dy / dt``) so the integrable
    singularity at the switch time never gets sampled; the compensating part
    is taken at the interval midpoint.
    """
    edges = np.asarray(edges, dtype=float)
    _, y = opt_path(nu, edges)
    direct = np.pi * np.diff(y) / np.diff(edges)
    _, comp = u_y_terms(nu, 0.5 * (edges[1:] + edges[:-1]))
    return direct + comp


def general_schedule(v, t_end: float, dt: float) -> QubitProtocol:
    """Optimal cooling protocol for an arbitrary non-normal qubit term ``V``.

    The system starts in the state whose rotated-frame first eigenvalue is 0
    and is driven with ``H(t) = -H~ + gamma u_y(gamma t) U~^* sigma_y U~``.
    """
    form = normal_form(v)
    n = max(int(np.ceil(t_end / dt - 1e-9)), 1)
    times = np.linspace(0.0, t_end, n + 1)
    amp = form.gamma * interval_controls(form.nu, form.gamma * times)
    frame = dag(form.u_tilde) @ SIGMA_Y @ form.u_tilde
    hs = -form.h_tilde[None] + amp[:, None, None] * frame[None]
    rho0 = dag(form.u_tilde) @ np.diag([0.0, 1.0]).astype(complex) @ form.u_tilde
    return QubitProtocol(ControlSchedule(times=times, hamiltonians=hs), rho0, form)


def rank_one_system(nu: float) -> LindbladSystem:
    _check_nu(nu)
    return LindbladSystem.from_terms([v_tilde(nu)], name=f"qubit_rank_one(nu={nu})")
