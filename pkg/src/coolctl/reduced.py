"""Reduced control system on the probability simplex.

The eigenvalue vector ``lam`` of ``rho = U diag(lam) U^*`` moves with
``lam_dot = G(U) lam`` where ``G(U) = J(U) - diag(1^T J(U))`` and
``J(U)_ij = sum_k |<i|U^* V_k U|j>|^2``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import logm

from .quantum import (
    ControlSchedule, LindbladSystem, dag, hermitize, integrate_full, spectrum_desc,
)

UNITARY_TOL = 1e-10
SIMPLEX_TOL = 1e-9
CHUNK = 1024


class SimplexError(RuntimeError):
    pass


def as_simplex_point(lam, tol: float = 1e-12) -> np.ndarray:
    lam = np.asarray(lam, dtype=float)
    if lam.ndim != 1:
        raise ValueError("simplex point must be a vector")
    if lam.min() < -tol or abs(lam.sum() - 1.0) > max(tol, 1e-12):
        raise ValueError(f"not a point of the simplex: {lam}")
    lam = np.clip(lam, 0.0, None)
    return lam / lam.sum()


def is_unitary(u: np.ndarray, tol: float = UNITARY_TOL) -> bool:
    u = np.asarray(u)
    return bool(np.max(np.abs(dag(u) @ u - np.eye(u.shape[-1]))) <= tol)


def to_special(u: np.ndarray) -> np.ndarray:
    """Rescale a unitary by a global phase so that ``det = 1``."""
    u = np.asarray(u, dtype=complex)
    n = u.shape[-1]
    det = np.linalg.det(u)
    phase = np.exp(-1j * np.angle(det) / n)
    return u * (phase[..., None, None] if np.ndim(phase) else phase)


def permutation_matrix(perm) -> np.ndarray:
    """Matrix ``P`` with ``P e_j = e_{perm[j]}``."""
    n = len(perm)
    p = np.zeros((n, n))
    p[np.asarray(perm), np.arange(n)] = 1.0
    return p


def j_matrix(sys: LindbladSystem, u=None, check: bool = True) -> np.ndarray:
    if u is None:
        u = np.eye(sys.n)
    u = np.asarray(u, dtype=complex)
    if check and not is_unitary(u):
        raise ValueError("control is not unitary")
    j = np.zeros((sys.n, sys.n))
    for v in sys.terms:
        j += np.abs(dag(u) @ v @ u) ** 2
    return j


def j_matrices(sys: LindbladSystem, us: np.ndarray) -> np.ndarray:
    """Vectorized ``j_matrix`` over a stack of unitaries ``(m, n, n)``."""
    us = np.asarray(us, dtype=complex)
    out = np.zeros(us.shape[:1] + (sys.n, sys.n))
    udag = dag(us)
    for v in sys.terms:
        out += np.abs(udag @ v @ us) ** 2
    return out


def induced_generator(j) -> np.ndarray:
    j = np.asarray(j, dtype=float)
    g = j.copy()
    idx = np.arange(j.shape[-1])
    g[..., idx, idx] -= j.sum(axis=-2)
    return g


def apply_generator(g, lam) -> np.ndarray:
    g = np.asarray(g, dtype=float)
    lam = np.asarray(lam, dtype=float)
    if g.shape[-1] != lam.shape[-1]:
        raise ValueError("dimension mismatch")
    return g @ lam


def _haar_batch(n: int, count: int, rng: np.random.Generator) -> np.ndarray:
    z = (rng.standard_normal((count, n, n)) + 1j * rng.standard_normal((count, n, n))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r, axis1=-2, axis2=-1)
    q = q * (d / np.abs(d))[:, None, :]
    return to_special(q)


def haar_unitary(n: int, seed=None) -> np.ndarray:
    """One Haar-random element of SU(n); deterministic for a fixed seed."""
    if n < 2:
        raise ValueError("n must be at least 2")
    return _haar_batch(n, 1, np.random.default_rng(seed))[0]


def haar_unitaries(n: int, count: int, seed=None) -> np.ndarray:
    """``count`` Haar unitaries.

    The sample range is cut into fixed chunks of ``CHUNK`` with seeds spawned
    from ``seed``, so the output does not depend on how chunks are scheduled.
    """
    if n < 2:
        raise ValueError("n must be at least 2")
    if count <= 0:
        return np.zeros((0, n, n), dtype=complex)
    nchunks = -(-count // CHUNK)
    root = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    seqs = root.spawn(nchunks)
    parts = []
    for c, ss in enumerate(seqs):
        m = min(CHUNK, count - c * CHUNK)
        parts.append(_haar_batch(n, m, np.random.default_rng(ss)))
    return np.concatenate(parts)


def derv_sample(sys: LindbladSystem, lam, count: int, seed=None) -> np.ndarray:
    """``count`` achievable derivatives ``G(U_i) lam`` with Haar ``U_i``."""
    if count < 1:
        raise ValueError("count must be at least 1")
    lam = as_simplex_point(lam)
    js = j_matrices(sys, haar_unitaries(sys.n, count, seed))
    return induced_generator(js) @ lam


@dataclass
class UnitarySchedule:
    """Special unitaries sampled on a time grid.

    ``at(t)`` holds ``unitaries[k]`` on ``[times[k], times[k+1])``; lifting
    interpolates between samples instead.
    """

    times: np.ndarray
    unitaries: np.ndarray

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.unitaries = np.asarray(self.unitaries, dtype=complex)
        if len(self.times) != len(self.unitaries):
            raise ValueError("need one unitary per grid time")
        if len(self.times) > 1 and np.any(np.diff(self.times) <= 0):
            raise ValueError("grid must be strictly increasing")
        if not is_unitary(self.unitaries):
            raise ValueError("schedule contains non-unitary samples")
        dets = np.linalg.det(self.unitaries)
        if np.max(np.abs(dets - 1.0)) > UNITARY_TOL:
            raise ValueError("schedule samples must have determinant 1")

    @classmethod
    def constant(cls, u, t_end: float) -> "UnitarySchedule":
        u = to_special(u)
        return cls([0.0, t_end], [u, u])

    @classmethod
    def piecewise(cls, segments) -> "UnitarySchedule":
        """Schedule from ``[(unitary, duration), ...]``; zero durations are dropped."""
        times, us, t = [], [], 0.0
        for u, d in segments:
            if d < 0:
                raise ValueError("negative segment duration")
            if d == 0:
                continue
            times.append(t)
            us.append(to_special(u))
            t += d
        if not us:
            u0 = to_special(segments[0][0])
            return cls([0.0], [u0])
        times.append(t)
        us.append(us[-1])
        return cls(times, us)

    def at(self, t: float) -> np.ndarray:
        k = int(np.searchsorted(self.times, t, side="right")) - 1
        return self.unitaries[min(max(k, 0), len(self.unitaries) - 1)]


def integrate_reduced(sys: LindbladSystem, lam0, ctrl: UnitarySchedule, t_end: float, dt: float):
    """RK4 on ``lam_dot = G(U(t)) lam``; the control is held per step.

    Steps are split at schedule switching times so every step sees a single
    generator.  Returns ``(times, lams)``.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    lam = as_simplex_point(lam0, 1e-9)
    breaks = [t for t in ctrl.times if 0.0 < t < t_end]
    edges = [0.0, *breaks, t_end]
    times, lams = [0.0], [lam]
    cache: dict[int, np.ndarray] = {}
    for a, b in zip(edges[:-1], edges[1:]):
        if b <= a:
            continue
        k = min(max(int(np.searchsorted(ctrl.times, 0.5 * (a + b), side="right")) - 1, 0),
                len(ctrl.unitaries) - 1)
        if k not in cache:
            cache[k] = induced_generator(j_matrix(sys, ctrl.unitaries[k], check=False))
        g = cache[k]
        m = max(int(np.ceil((b - a) / dt - 1e-9)), 1)
        h = (b - a) / m
        for i in range(m):
            k1 = g @ lam
            k2 = g @ (lam + 0.5 * h * k1)
            k3 = g @ (lam + 0.5 * h * k2)
            k4 = g @ (lam + h * k3)
            lam = lam + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
            if lam.min() < -SIMPLEX_TOL:
                raise SimplexError(f"left the simplex at t={a + (i + 1) * h:.6g}: {lam}")
            lam = lam / lam.sum()
            times.append(a + (i + 1) * h)
            lams.append(lam)
    return np.array(times), np.array(lams)


def ad_pinv(rho: np.ndarray, x: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    """Moore-Penrose inverse of ``ad_rho = [rho, .]`` applied to ``x``."""
    p, w = np.linalg.eigh(hermitize(rho))
    xt = dag(w) @ x @ w
    gap = p[:, None] - p[None, :]
    mask = np.abs(gap) > tol
    yt = np.zeros_like(xt)
    yt[mask] = xt[mask] / gap[mask]
    return w @ yt @ dag(w)


def compensating_hamiltonian(sys: LindbladSystem, rho) -> np.ndarray:
    """Hermitian ``H_c`` with ``-i[H_c, rho]`` cancelling the dissipative drift
    tangent to the unitary orbit of ``rho``.

    The drift Hamiltonian ``h0`` is not included; ``lift_control`` removes it
    separately.
    """
    rho = np.asarray(rho, dtype=complex)
    # -i[H, rho] = -X  <=>  [rho, H] = i X
    return hermitize(ad_pinv(rho, 1j * sys.dissipative_part(rho)))


def _interp_unitary(u0: np.ndarray, u1: np.ndarray, s: float) -> np.ndarray:
    # geodesic u0 -> u1
    gen = logm(u1 @ dag(u0))
    w, v = np.linalg.eig(gen)
    return (v * np.exp(s * w)) @ np.linalg.inv(v) @ u0


def lift_control(sys: LindbladSystem, times, lams, ctrl: UnitarySchedule) -> ControlSchedule:
    """Piecewise-constant full control reproducing a reduced trajectory.

    On each grid interval the Hamiltonian is ``i log(U_{k+1} U_k^*)/dt`` (the
    direct term, exact for the geodesic between samples) plus the
    compensating Hamiltonian at the interval midpoint, minus ``h0``.
    The reduced trajectory and the unitary schedule must share the grid.
    """
    times = np.asarray(times, dtype=float)
    lams = np.asarray(lams, dtype=float)
    if len(times) != len(lams) or len(times) != len(ctrl.times) or \
            np.max(np.abs(times - ctrl.times)) > 1e-12:
        raise ValueError("reduced trajectory and unitary schedule grids are misaligned")
    us = ctrl.unitaries
    hs = []
    for k in range(len(times) - 1):
        dt = times[k + 1] - times[k]
        step = us[k + 1] @ dag(us[k])
        if np.max(np.abs(step - np.eye(sys.n))) < 1e-14:
            direct = np.zeros((sys.n, sys.n), dtype=complex)
            umid = us[k]
        else:
            direct = hermitize(1j * logm(step) / dt)
            umid = _interp_unitary(us[k], us[k + 1], 0.5)
        lmid = 0.5 * (lams[k] + lams[k + 1])
        rho_mid = umid @ np.diag(lmid) @ dag(umid)
        hs.append(direct + compensating_hamiltonian(sys, rho_mid) - sys.h0)
    return ControlSchedule(times=times, hamiltonians=np.array(hs))


def lifted_spectra(sys: LindbladSystem, times, lams, ctrl: UnitarySchedule, substeps: int = 1):
    """Integrate the full system under ``lift_control`` and return its spectra
    on the reduced grid (the lift-consistency oracle)."""
    sched = lift_control(sys, times, lams, ctrl)
    u0 = ctrl.unitaries[0]
    rho0 = u0 @ np.diag(lams[0]) @ dag(u0)
    dt = float(np.min(np.diff(times))) / substeps
    t_full, states = integrate_full(sys, rho0, sched, float(times[-1]), dt)
    idx = np.searchsorted(t_full, times - 1e-12)
    return np.array([spectrum_desc(states[i]) for i in idx])
