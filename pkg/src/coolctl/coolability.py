"""Asymptotic coolability: a common eigenvector of all Lindblad terms that is
not also a common left eigenvector."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import orth

from .quantum import LindbladSystem, dag

RESIDUAL_TOL = 1e-9
CLUSTER_TOL = 1e-8
RANK_TOL = 1e-7


@dataclass
class CommonEigenvector:
    vector: np.ndarray
    eigenvalues: tuple


@dataclass
class CommonEigenspaces:
    """Isolated common-eigenvector rays plus subspaces (dim > 1) on which every
    term acts as a scalar."""

    rays: list[CommonEigenvector] = field(default_factory=list)
    continua: list[tuple[np.ndarray, tuple]] = field(default_factory=list)

    @property
    def continuum(self) -> bool:
        return bool(self.continua)


@dataclass
class CoolabilityVerdict:
    coolable: bool
    witness: np.ndarray | None
    rays: list[CommonEigenvector]
    continuum: bool
    continuum_bases: list[np.ndarray]

    def to_dict(self) -> dict:
        def vec(w):
            return [[float(z.real), float(z.imag)] for z in w]
        return {
            "coolable": self.coolable,
            "witness": None if self.witness is None else vec(self.witness),
            "rays": [{"vector": vec(r.vector),
                      "eigenvalues": [[float(z.real), float(z.imag)] for z in r.eigenvalues]}
                     for r in self.rays],
            "continuum": self.continuum,
            "continuum_bases": [[vec(c) for c in b.T] for b in self.continuum_bases],
        }


def _null(a: np.ndarray, tol: float) -> np.ndarray:
    """Orthonormal null space with an absolute singular-value cutoff."""
    _, s, vh = np.linalg.svd(a)
    rank = int(np.sum(s > tol))
    return dag(vh[rank:])


def _scale(ops) -> float:
    return max([1.0] + [float(np.linalg.norm(a, 2)) for a in ops])


def _cluster(values, tol):
    groups: list[list[complex]] = []
    for v in values:
        for g in groups:
            if abs(v - np.mean(g)) <= tol:
                g.append(v)
                break
        else:
            groups.append([v])
    return [complex(np.mean(g)) for g in groups]


def _is_scalar(a: np.ndarray, tol: float):
    mu = np.trace(a) / a.shape[0]
    return np.max(np.abs(a - mu * np.eye(a.shape[0])), initial=0.0) <= tol, mu


def _largest_invariant(basis: np.ndarray, ops, tol) -> np.ndarray:
    """Largest subspace of span(basis) invariant under every op (columns orthonormal)."""
    s = basis
    for _ in range(basis.shape[0] + 1):
        if s.shape[1] == 0:
            return s
        # x = s c with (1 - s s^*) A s c = 0 for all A
        proj = np.eye(s.shape[0]) - s @ dag(s)
        stacked = np.vstack([proj @ a @ s for a in ops])
        c = _null(stacked, tol)
        if c.shape[1] == s.shape[1]:
            return s
        s = orth(s @ c) if c.shape[1] else s[:, :0]
    return s


def _search(ops, basis, out: CommonEigenspaces, depth: int, scale: float):
    """Recurse on ``ops`` restricted to the invariant subspace spanned by ``basis``."""
    restricted = [dag(basis) @ a @ basis for a in ops]
    tol = RANK_TOL * scale
    scalars = [_is_scalar(r, tol) for r in restricted]
    if all(ok for ok, _ in scalars):
        mus = tuple(complex(m) for _, m in scalars)
        if basis.shape[1] == 1:
            out.rays.append(CommonEigenvector(basis[:, 0], mus))
        else:
            out.continua.append((basis, mus))
        return
    if depth <= 0:
        return
    k = next(i for i, (ok, _) in enumerate(scalars) if not ok)
    a = restricted[k]
    d = a.shape[0]
    for lam in _cluster(np.linalg.eigvals(a), CLUSTER_TOL * scale):
        e = _null(a - lam * np.eye(d), tol)
        if e.shape[1] == 0:
            continue
        inv = _largest_invariant(basis @ e, ops, tol)
        if inv.shape[1]:
            _search(ops, inv, out, depth - 1, scale)


def _dedupe(rays):
    kept: list[CommonEigenvector] = []
    for r in rays:
        v = r.vector / np.linalg.norm(r.vector)
        if all(abs(abs(np.vdot(k.vector, v)) - 1.0) > 1e-8 for k in kept):
            # fix the global phase: largest component real positive
            i = int(np.argmax(np.abs(v)))
            kept.append(CommonEigenvector(v * np.exp(-1j * np.angle(v[i])), r.eigenvalues))
    return kept


def common_eigenvectors(terms) -> CommonEigenspaces:
    ops = [np.asarray(t, dtype=complex) for t in terms]
    if not ops:
        raise ValueError("need at least one matrix")
    n = ops[0].shape[0]
    if any(a.shape != (n, n) for a in ops):
        raise ValueError("terms must share one square dimension")
    out = CommonEigenspaces()
    _search(ops, np.eye(n, dtype=complex), out, depth=n, scale=_scale(ops))
    out.rays = _dedupe(out.rays)
    return out


def _left_residual(w, a) -> float:
    w = w / np.linalg.norm(w)
    mu = np.vdot(w, a @ w)  # w^* A w
    return float(np.linalg.norm(dag(a) @ w - np.conj(mu) * w))


def is_common_left_eigenvector(w, terms, tol: float = RESIDUAL_TOL) -> bool:
    """True iff ``w^* V_k`` is a multiple of ``w^*`` for every term."""
    w = np.asarray(w, dtype=complex)
    return all(_left_residual(w, np.asarray(a, dtype=complex)) <= tol for a in terms)


def _right_residual(w, a, mu) -> float:
    return float(np.linalg.norm(a @ w - mu * w))


def is_coolable(sys: LindbladSystem) -> CoolabilityVerdict:
    n = sys.n
    terms = [v - np.trace(v) / n * np.eye(n) for v in sys.terms]
    found = common_eigenvectors(terms)
    witness = None
    for r in found.rays:
        if not is_common_left_eigenvector(r.vector, terms):
            witness = r.vector
            break
    if witness is None:
        rng = np.random.default_rng(0)
        for basis, _ in found.continua:
            d = basis.shape[1]
            mixes = [np.eye(d)[:, i] for i in range(d)]
            mixes.append(rng.standard_normal(d) + 1j * rng.standard_normal(d))
            for c in mixes:
                w = basis @ c
                w = w / np.linalg.norm(w)
                if not is_common_left_eigenvector(w, terms):
                    witness = w
                    break
            if witness is not None:
                break
    if witness is not None:
        # witness residuals are checked on the original terms
        for v in sys.terms:
            mu = np.vdot(witness, v @ witness)
            if _right_residual(witness, v, mu) > RESIDUAL_TOL:
                raise RuntimeError("common eigenvector residual above tolerance")
    return CoolabilityVerdict(
        coolable=witness is not None,
        witness=witness,
        rays=found.rays,
        continuum=found.continuum,
        continuum_bases=[b for b, _ in found.continua],
    )
