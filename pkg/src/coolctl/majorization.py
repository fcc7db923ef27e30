"""Majorization, Schur-convex costs, small convex hulls and the filter that
keeps only the cooling-optimal vertices of a derivative polytope."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog
from scipy.spatial import ConvexHull

MAJ_TOL = 1e-12
MERGE_TOL = 1e-10
DOMINANCE_SLACK = 1e-9


def majorizes(lam, mu, tol: float = MAJ_TOL) -> bool:
    """``lam`` majorizes ``mu``: sorted partial sums of ``lam`` dominate."""
    lam = np.sort(np.asarray(lam, dtype=float))[::-1]
    mu = np.sort(np.asarray(mu, dtype=float))[::-1]
    if lam.shape != mu.shape:
        raise ValueError("dimension mismatch")
    return bool(np.all(np.cumsum(lam) >= np.cumsum(mu) - tol))


def inf_majorizes(v, w, tol: float = MAJ_TOL) -> bool:
    """Unordered (infinitesimal) majorization of tangent vectors."""
    v = np.asarray(v, dtype=float)
    w = np.asarray(w, dtype=float)
    if v.shape != w.shape:
        raise ValueError("dimension mismatch")
    return bool(np.all(np.cumsum(v) >= np.cumsum(w) - tol))


def schur_cost(name: str, lam) -> float:
    lam = np.asarray(lam, dtype=float)
    if name == "purity":
        return float(np.sum(lam ** 2))
    if name == "entropy":
        p = lam[lam > 0]
        return float(-np.sum(p * np.log(p)))
    if name == "max_eigenvalue":
        return float(np.max(lam))
    raise ValueError(f"unknown cost {name!r}")


#: costs that grow when a state gets cooler (Schur-convex); entropy shrinks
COOLING_SIGN = {"purity": -1.0, "max_eigenvalue": -1.0, "entropy": 1.0}


def sum_zero_chart(n: int) -> np.ndarray:
    """Orthonormal basis (columns) of ``{x : sum x = 0}`` from Gram-Schmidt on
    ``e_i - e_{i+1}``."""
    d = np.zeros((n, n - 1))
    for i in range(n - 1):
        d[i, i], d[i + 1, i] = 1.0, -1.0
    q = np.zeros_like(d)
    for i in range(n - 1):
        v = d[:, i] - q[:, :i] @ (q[:, :i].T @ d[:, i])
        q[:, i] = v / np.linalg.norm(v)
    return q


@dataclass
class Polytope:
    """Convex polytope inside an affine slice of R^n.

    ``facets`` are ``(normal, offset)`` with ``normal @ x <= offset``;
    ``equalities`` pin the affine hull (``normal @ x == offset``).
    """

    vertices: np.ndarray
    facets: list[tuple[np.ndarray, float]]
    equalities: list[tuple[np.ndarray, float]] = field(default_factory=list)
    dim: int = 0
    chart: np.ndarray | None = None

    @property
    def n(self) -> int:
        return self.vertices.shape[1]

    def facet_vertex_counts(self, tol: float = 1e-9) -> list[int]:
        return [int(np.sum(np.abs(self.vertices @ a - b) <= tol)) for a, b in self.facets]

    def edges(self, tol: float = 1e-9) -> set[tuple[int, int]]:
        """Vertex pairs sharing at least ``dim - 1`` facets (polytope edges)."""
        if self.dim <= 1:
            return {(0, 1)} if len(self.vertices) == 2 else set()
        on = np.array([np.abs(self.vertices @ a - b) <= tol for a, b in self.facets]).T
        out = set()
        for i in range(len(self.vertices)):
            for j in range(i + 1, len(self.vertices)):
                common = np.flatnonzero(on[i] & on[j])
                if len(common) >= self.dim - 1 and self._edge_rank(common) >= self.dim - 1:
                    out.add((i, j))
        return out

    def _edge_rank(self, idx) -> int:
        if len(idx) == 0:
            return 0
        return int(np.linalg.matrix_rank(np.array([self.facets[k][0] for k in idx]), tol=1e-9))


def _merge_points(points: np.ndarray, tol: float) -> np.ndarray:
    kept: list[np.ndarray] = []
    for p in points:
        if all(np.max(np.abs(p - q)) > tol for q in kept):
            kept.append(p)
    return np.array(kept)


def convex_hull(points, tol: float = MERGE_TOL) -> Polytope:
    """Hull of points lying on a common slice ``sum x = const`` (n <= 4).

    Works in the orthonormal chart of the sum-zero hyperplane, reduced further
    to the affine hull of the points when they are degenerate.
    """
    pts = _merge_points(np.atleast_2d(np.asarray(points, dtype=float)), tol)
    n = pts.shape[1]
    total = pts.sum(axis=1)
    if np.max(np.abs(total - total[0])) > 1e-8:
        raise ValueError("points do not share a common coordinate sum")
    chart = sum_zero_chart(n)
    equalities = [(np.ones(n) / np.sqrt(n), float(total[0]) / np.sqrt(n))]
    base = pts[0]
    y = (pts - base) @ chart
    # affine hull inside the chart
    if len(pts) > 1:
        _, s, vt = np.linalg.svd(y, full_matrices=True)
        rank = int(np.sum(s > 1e-9 * max(1.0, s[0])))
    else:
        vt, rank = np.eye(n - 1), 0
    sub = vt[:rank].T  # chart coords -> affine-hull coords
    for row in vt[rank:]:
        a = chart @ row
        equalities.append((a, float(a @ base)))
    if rank > 3:
        raise ValueError("hull dimension above 3 is not supported")
    z = y @ sub
    facets: list[tuple[np.ndarray, float]] = []
    if rank == 0:
        verts = pts[:1]
    elif rank == 1:
        lo, hi = int(np.argmin(z[:, 0])), int(np.argmax(z[:, 0]))
        verts = pts[[lo, hi]]
        d = chart @ sub[:, 0]
        facets = [(d, float(d @ pts[hi])), (-d, float(-d @ pts[lo]))]
    else:
        hull = ConvexHull(z)
        verts = pts[np.sort(hull.vertices)]
        for eq in hull.equations:
            a = chart @ (sub @ eq[:-1])
            b = float(-eq[-1] + a @ base)
            norm = np.linalg.norm(a)
            a, b = a / norm, b / norm
            if all(np.max(np.abs(a - a2)) > 1e-9 or abs(b - b2) > 1e-9 for a2, b2 in facets):
                facets.append((a, b))
    return Polytope(vertices=verts, facets=facets, equalities=equalities, dim=rank, chart=chart)


def contains(p: Polytope, x, tol: float = 1e-9) -> bool:
    x = np.asarray(x, dtype=float)
    if any(abs(a @ x - b) > tol for a, b in p.equalities):
        return False
    return all(a @ x <= b + tol for a, b in p.facets)


def facet_violation(p: Polytope, xs) -> np.ndarray:
    """Largest signed violation per point over facets and affine equalities."""
    xs = np.atleast_2d(np.asarray(xs, dtype=float))
    cols = [xs @ a - b for a, b in p.facets]
    cols += [np.abs(xs @ a - b) for a, b in p.equalities]
    return np.max(np.array(cols), axis=0)


def distance_to_hull(p: Polytope, x) -> float:
    """Euclidean distance from ``x`` to ``conv(p.vertices)`` (small QP via SLSQP)."""
    from scipy.optimize import minimize

    x = np.asarray(x, dtype=float)
    v = p.vertices
    m = len(v)
    res = minimize(lambda w: np.sum((w @ v - x) ** 2), np.full(m, 1.0 / m),
                   jac=lambda w: 2 * v @ (w @ v - x),
                   bounds=[(0, 1)] * m,
                   constraints=[{"type": "eq", "fun": lambda w: w.sum() - 1.0}],
                   method="SLSQP", options={"ftol": 1e-15, "maxiter": 500})
    return float(np.sqrt(max(res.fun, 0.0)))


def is_dominated(v, vertices, slack: float = DOMINANCE_SLACK) -> bool:
    """Does some convex combination ``u`` of ``vertices`` satisfy ``u >= v`` in
    every partial sum with a gap of at least ``slack`` somewhere?"""
    v = np.asarray(v, dtype=float)
    verts = np.asarray(vertices, dtype=float)
    n = len(v)
    s = np.tril(np.ones((n, n)))  # partial-sum functionals
    sv = s @ v
    sp = verts @ s.T  # (m, n) partial sums of each vertex
    m = len(verts)
    for k in range(n - 1):
        # maximize the k-th partial sum gap subject to all gaps >= 0
        res = linprog(-sp[:, k], A_ub=-sp.T, b_ub=-sv, A_eq=np.ones((1, m)), b_eq=[1.0],
                      bounds=[(0, None)] * m, method="highs",
                      options={"primal_feasibility_tolerance": 1e-10,
                               "dual_feasibility_tolerance": 1e-10})
        if res.status != 0:
            continue
        w = np.clip(res.x, 0, None)
        w /= w.sum()
        gaps = w @ sp - sv
        if gaps.min() >= -1e-11 and gaps[k] >= slack:
            return True
    return False


def optimal_vertices(p: Polytope) -> np.ndarray:
    """Vertices not strictly dominated (unordered partial sums) by any point of ``p``."""
    verts = p.vertices
    keep = [v for v in verts if not is_dominated(v, verts)]
    return np.array(keep)
