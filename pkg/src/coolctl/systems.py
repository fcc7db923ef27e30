"""The Lambda-, V- and spin-spin systems: permutation polytopes, optimal
generators, cooling schedules, J-matrix bounds and the facet checker used to
probe the spin-spin polytope conjecture."""
from __future__ import annotations

import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .majorization import COOLING_SIGN, convex_hull, distance_to_hull, schur_cost
from .quantum import SIGMA_MINUS, LindbladSystem, basis_op, dag
from .reduced import (
    as_simplex_point, haar_unitaries, induced_generator, j_matrices, j_matrix,
    permutation_matrix, to_special,
)

SWAP_23 = (0, 2, 1)


def _check_rates(*rates):
    if any(g <= 0 for g in rates):
        raise ValueError("decay rates must be positive")


def make_lambda_system(g1: float = 1.0, g2: float = 2.0) -> LindbladSystem:
    """Decay from level 1 into levels 2 and 3."""
    _check_rates(g1, g2)
    terms = [np.sqrt(g1) * basis_op(1, 0, 3), np.sqrt(g2) * basis_op(2, 0, 3)]
    return LindbladSystem.from_terms(terms, name=f"lambda({g1},{g2})")


def make_v_system(g1: float = 1.0, g2: float = 2.0) -> LindbladSystem:
    """Decay from levels 2 and 3 into level 1."""
    _check_rates(g1, g2)
    terms = [np.sqrt(g1) * basis_op(0, 1, 3), np.sqrt(g2) * basis_op(0, 2, 3)]
    return LindbladSystem.from_terms(terms, name=f"vsys({g1},{g2})")


def make_spin_spin() -> LindbladSystem:
    """Two qubits with the single term ``sigma_- (x) 1``."""
    return LindbladSystem.from_terms([np.kron(SIGMA_MINUS, np.eye(2))], name="spinspin")


def permutation_generator(sys: LindbladSystem, perm) -> np.ndarray:
    return induced_generator(j_matrix(sys, permutation_matrix(perm)))


def permutation_vertices(sys: LindbladSystem, lam, tol: float = 1e-12) -> np.ndarray:
    """Distinct derivatives ``G(P) lam`` over all permutation matrices ``P``."""
    lam = np.asarray(lam, dtype=float)
    out: list[np.ndarray] = []
    for perm in itertools.permutations(range(sys.n)):
        v = permutation_generator(sys, perm) @ lam
        if all(np.max(np.abs(v - w)) > tol for w in out):
            out.append(v)
    return np.array(out)


# ---------------------------------------------------------------------------
# V-system schedule
# ---------------------------------------------------------------------------

@dataclass
class CoolingSchedule:
    """Sequence of ``(permutation, duration)`` segments."""

    segments: list[tuple[tuple[int, ...], float]]
    clamped: bool = False
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        for perm, d in self.segments:
            if d < 0:
                raise ValueError("segment durations must be non-negative")
            if sorted(perm) != list(range(len(perm))):
                raise ValueError(f"invalid permutation {perm}")

    @property
    def total_time(self) -> float:
        return float(sum(d for _, d in self.segments))

    def unitary_segments(self):
        return [(permutation_matrix(p), d) for p, d in self.segments]

    def to_dict(self) -> dict:
        return {
            "segments": [{"permutation": [int(i) for i in p], "duration": float(d)}
                         for p, d in self.segments],
            "total_time": self.total_time,
            "clamped": self.clamped,
            **self.meta,
        }


def v_clamp_threshold(lam0, g1: float, g2: float) -> float:
    _, b0, c0 = lam0
    return 2.0 * b0 * (c0 / b0) ** (g2 / (g2 - g1))


def v_final_state(lam0, t1: float, t2: float, g1: float = 1.0, g2: float = 2.0) -> np.ndarray:
    """State after ``t1`` on the fast-``b`` generator and ``t2`` on the fast-``c`` one."""
    if t1 < 0 or t2 < 0:
        raise ValueError("durations must be non-negative")
    a0, b0, c0 = lam0
    eb = np.exp(-(g2 * t1 + g1 * t2))
    ec = np.exp(-(g1 * t1 + g2 * t2))
    return np.array([a0 + (1 - eb) * b0 + (1 - ec) * c0, eb * b0, ec * c0])


def _bisect(f, lo: float, hi: float, tol: float = 1e-12) -> float:
    flo = f(lo)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
        if hi - lo <= tol:
            break
    return 0.5 * (lo + hi)


def v_schedule(lam0, eps: float, g1: float = 1.0, g2: float = 2.0) -> CoolingSchedule:
    """Minimal-time schedule bringing ``b + c`` down to ``eps`` (largest eigenvalue
    ``1 - eps``) from a sorted state ``lam0 = (a0, b0, c0)``.

    The first segment uses the permutation that lets ``b`` decay at the larger
    rate ``g2``; the second keeps the identity so ``c`` decays at ``g2``.
    """
    a0, b0, c0 = lam0 = tuple(float(x) for x in lam0)
    if not (a0 >= b0 >= c0 >= 0):
        raise ValueError("lam0 must be sorted non-increasingly")
    if not g1 < g2:
        raise ValueError("need g1 < g2 (equal rates make the problem trivial)")
    if not 0 < eps < b0 + c0:
        raise ValueError(f"eps must lie in (0, {b0 + c0})")
    clamped = eps > v_clamp_threshold(lam0, g1, g2)
    if clamped:
        t2 = 0.0
        t1 = _bisect(lambda t: np.exp(-g2 * t) * b0 + np.exp(-g1 * t) * c0 - eps, 0.0, 50.0 / g1)
    else:
        lb, lc = np.log(2 * b0 / eps), np.log(2 * c0 / eps)
        t1 = (g2 * lb - g1 * lc) / (g2 ** 2 - g1 ** 2)
        t2 = (g1 * lb - g2 * lc) / (g1 ** 2 - g2 ** 2)
    final = v_final_state(lam0, t1, t2, g1, g2)
    return CoolingSchedule(
        segments=[(SWAP_23, float(t1)), ((0, 1, 2), float(t2))],
        clamped=bool(clamped),
        meta={"eps": eps, "gamma": [g1, g2], "lam0": list(lam0),
              "final_state": final.tolist(),
              "constraint_residual": float(abs(final[1] + final[2] - eps))},
    )


# ---------------------------------------------------------------------------
# spin-spin system
# ---------------------------------------------------------------------------

#: permutations realizing (b, -b, d, -d) and (c, d, -c, -d) at (a, b, c, d)
SPIN_SPIN_OPTIMAL_PERMS = ((0, 2, 1, 3), (0, 1, 2, 3))


def spin_spin_optimal_generators() -> tuple[np.ndarray, np.ndarray]:
    sys = make_spin_spin()
    return tuple(permutation_generator(sys, p) for p in SPIN_SPIN_OPTIMAL_PERMS)


def spin_spin_propagate(lam0, t1: float, t2: float) -> np.ndarray:
    """Apply both optimal generators; each satisfies ``G^2 = -G`` so
    ``exp(tG) = 1 + (1 - e^{-t}) G``."""
    g1, g2 = spin_spin_optimal_generators()
    lam = np.asarray(lam0, dtype=float)
    lam = lam + (-np.expm1(-t1)) * (g1 @ lam)
    return lam + (-np.expm1(-t2)) * (g2 @ lam)


def golden_section(f, lo: float, hi: float, tol: float = 1e-10):
    invphi = (np.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c, d = b - invphi * (b - a), a + invphi * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    return x, f(x)


def spin_spin_schedule(lam0, cost: str, budget: float) -> CoolingSchedule:
    """Best split ``t1 + t2 = budget`` between the two optimal generators for a
    Schur-convex (purity, max_eigenvalue) or Schur-concave (entropy) cost."""
    if budget <= 0:
        raise ValueError("budget must be positive")
    sign = COOLING_SIGN[cost]
    lam0 = np.asarray(lam0, dtype=float)

    def objective(t1):
        return sign * schur_cost(cost, spin_spin_propagate(lam0, t1, budget - t1))

    x, fx = golden_section(objective, 0.0, budget)
    for edge in (0.0, budget):
        fe = objective(edge)
        if fe < fx:
            x, fx = edge, fe
    final = spin_spin_propagate(lam0, x, budget - x)
    return CoolingSchedule(
        segments=[(SPIN_SPIN_OPTIMAL_PERMS[0], float(x)),
                  (SPIN_SPIN_OPTIMAL_PERMS[1], float(budget - x))],
        meta={"cost": cost, "budget": budget, "lam0": lam0.tolist(),
              "final_state": final.tolist(), "cost_value": schur_cost(cost, final)},
    )


# ---------------------------------------------------------------------------
# bounds on J(U)
# ---------------------------------------------------------------------------

@dataclass
class JBound:
    """Halfspaces ``A vec(J) <= b`` and equalities ``E vec(J) == f`` (row-major vec)."""

    a: np.ndarray
    b: np.ndarray
    e: np.ndarray
    f: np.ndarray
    labels: list[str]

    def violation(self, js) -> np.ndarray:
        js = np.asarray(js, dtype=float)
        x = js.reshape(js.shape[0] if js.ndim == 3 else 1, -1)
        ineq = x @ self.a.T - self.b
        eq = np.abs(x @ self.e.T - self.f)
        return np.maximum(ineq.max(axis=1), eq.max(axis=1, initial=-np.inf))

    def contains(self, j, tol: float = 1e-9) -> bool:
        return bool(self.violation(j)[0] <= tol)


def _majorized_by(op: np.ndarray, spec: np.ndarray, label: str, rows, rhs, eqs, eqr, labels):
    """Rows for ``op @ vec(J) is majorized by spec``: every k-subset sum is at
    most the sum of the k largest entries; the totals agree."""
    n = len(spec)
    top = np.cumsum(np.sort(spec)[::-1])
    for k in range(1, n):
        for subset in itertools.combinations(range(n), k):
            rows.append(op[list(subset)].sum(axis=0))
            rhs.append(top[k - 1])
            labels.append(f"{label}:{subset}")
    eqs.append(op.sum(axis=0))
    eqr.append(top[-1])


def j_polytope_bound(sys: LindbladSystem) -> JBound:
    n = sys.n
    vvd = sum(v @ dag(v) for v in sys.terms)
    vdv = sum(dag(v) @ v for v in sys.terms)
    # linear maps vec(J) -> J 1 and J^T 1
    row_sum = np.kron(np.eye(n), np.ones((1, n)))
    col_sum = np.kron(np.ones((1, n)), np.eye(n))
    rows, rhs, eqs, eqr, labels = [], [], [], [], []
    specs = [
        (row_sum, np.linalg.eigvalsh(vvd), "J1"),
        (col_sum, np.linalg.eigvalsh(vdv), "JT1"),
        (row_sum + col_sum, np.linalg.eigvalsh(vvd + vdv), "(J+JT)1"),
        (row_sum - col_sum, np.linalg.eigvalsh(vvd - vdv), "(J-JT)1"),
    ]
    for op, spec, label in specs:
        _majorized_by(op, spec, label, rows, rhs, eqs, eqr, labels)
    for i in range(n * n):
        r = np.zeros(n * n)
        r[i] = -1.0
        rows.append(r)
        rhs.append(0.0)
        labels.append(f"J{divmod(i, n)}>=0")
    return JBound(np.array(rows), np.array(rhs), np.array(eqs), np.array(eqr), labels)


def spin_spin_j_check(j, tol: float = 1e-9) -> bool:
    j = np.asarray(j, dtype=float)
    if j.shape != (4, 4):
        raise ValueError("expected a 4x4 matrix")
    ones = np.ones(4)
    return bool(j.min() >= -tol
                and np.max(np.abs((j + j.T) @ ones - ones)) <= tol
                and np.max(np.diag(j)) <= 0.25 + tol)


# ---------------------------------------------------------------------------
# spin-spin facets and the conjecture harness
# ---------------------------------------------------------------------------

def _regular(lam, gap: float = 0.0) -> bool:
    s = np.sort(lam)
    return bool(np.min(np.diff(s)) > gap)


def spin_spin_facets(lam) -> list[tuple[np.ndarray, float]]:
    """Halfspaces ``(normal, offset)`` with ``normal @ lam_dot <= offset``:
    four hexagonal ``-lam_dot_i <= lam_i`` and four triangular ones."""
    lam = np.asarray(lam, dtype=float)
    if lam.shape != (4,) or not _regular(lam):
        raise ValueError("spin-spin facets need a regular point of the 3-simplex")
    out = []
    for i in range(4):
        a = np.zeros(4)
        a[i] = -1.0
        out.append((a, float(lam[i])))
    for i in range(4):
        rest = sorted((j for j in range(4) if j != i), key=lambda j: -lam[j])
        ib, ic, idd = rest
        b, c, d = lam[ib], lam[ic], lam[idd]
        # a_dot (b + d) - b_dot (c - b) <= b (c + d)
        a_ = np.zeros(4)
        a_[i] = b + d
        a_[ib] = -(c - b)
        out.append((a_, float(b * (c + d))))
    return out


def max_facet_violation(halfspaces, derivs) -> tuple[float, int]:
    derivs = np.atleast_2d(derivs)
    a = np.array([h[0] for h in halfspaces])
    b = np.array([h[1] for h in halfspaces])
    viol = (derivs @ a.T - b).max(axis=1)
    k = int(np.argmax(viol))
    return float(viol[k]), k


@dataclass
class ConjectureReport:
    samples: int
    points: int
    max_facet_violation: float
    tolerance: float
    worst_lam: np.ndarray | None = None
    worst_unitary: np.ndarray | None = None
    planted: dict | None = None

    @property
    def violated(self) -> bool:
        return self.max_facet_violation > self.tolerance or bool(
            self.planted and self.planted["flagged"])

    def to_dict(self) -> dict:
        def mat(u):
            return [[[float(z.real), float(z.imag)] for z in row] for row in u]
        return {
            "points": self.points,
            "samples": self.samples,
            "max_facet_violation": (None if not np.isfinite(self.max_facet_violation)
                                    else self.max_facet_violation),
            "tolerance": self.tolerance,
            "worst_case": None if self.worst_lam is None else {
                "lam": self.worst_lam.tolist(), "unitary": mat(self.worst_unitary)},
            "planted": self.planted,
            "violated": self.violated,
        }


def random_regular_points(count: int, n: int, seed, gap: float = 1e-3) -> np.ndarray:
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < count:
        lam = rng.dirichlet(np.ones(n))
        if _regular(lam, gap):
            out.append(lam)
    return np.array(out)


def _check_point(sys, lam, sample_count, seq):
    us = haar_unitaries(sys.n, sample_count, seq)
    derivs = induced_generator(j_matrices(sys, us)) @ lam
    viol, k = max_facet_violation(spin_spin_facets(lam), derivs)
    return viol, us[k]


def planted_self_test(tol: float = 1e-9) -> dict:
    """Feed a Lambda-system derivative known to leave its permutation polytope
    into the checker; it must be flagged."""
    deriv, _ = lambda_counterexample(0.5)
    poly = convex_hull(permutation_vertices(make_lambda_system(1.0, 1.0), [1.0, 0.0, 0.0]))
    halfspaces = list(poly.facets)
    halfspaces += [(a, b) for a, b in poly.equalities] + [(-a, -b) for a, b in poly.equalities]
    viol, _ = max_facet_violation(halfspaces, deriv)
    return {"derivative": deriv.tolist(), "violation": viol, "flagged": bool(viol > tol)}


def verify_conjecture(lam_count: int, sample_count: int, seed=1, tol: float = 1e-9,
                      plant: bool = False, workers: int = 1) -> ConjectureReport:
    """Search Haar-sampled spin-spin derivatives for points outside the
    permutation polytope, via its facet description."""
    if lam_count < 1 or sample_count < 0:
        raise ValueError("need lam_count >= 1 and sample_count >= 0")
    planted = planted_self_test(tol) if plant else None
    if sample_count == 0:
        return ConjectureReport(0, lam_count, float("-inf"), tol, planted=planted)
    sys = make_spin_spin()
    root = np.random.SeedSequence(seed)
    lam_seq, *point_seqs = root.spawn(lam_count + 1)
    lams = random_regular_points(lam_count, 4, lam_seq)
    jobs = list(zip(lams, point_seqs))
    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            results = list(ex.map(lambda job: _check_point(sys, job[0], sample_count, job[1]), jobs))
    else:
        results = [_check_point(sys, lam, sample_count, s) for lam, s in jobs]
    k = int(np.argmax([r[0] for r in results]))
    return ConjectureReport(sample_count, lam_count, results[k][0], tol,
                            worst_lam=lams[k], worst_unitary=results[k][1], planted=planted)


# ---------------------------------------------------------------------------
# counterexample and vertex polytopes
# ---------------------------------------------------------------------------

def lambda_counterexample(x: float):
    """Derivative at ``e1`` of the Lambda-system (rates 1, 1) under the 1-2 rotation
    with ``|U_11|^2 = x``, and its distance to ``conv{0, (-2, 1, 1)}``."""
    if not 0.0 <= x <= 1.0:
        raise ValueError("x must lie in [0, 1]")
    y = 1.0 - x
    deriv = np.array([-(x * y + x), x * y, x])
    seg = np.array([-2.0, 1.0, 1.0])
    t = np.clip(deriv @ seg / (seg @ seg), 0.0, 1.0)
    return deriv, float(np.linalg.norm(deriv - t * seg))


def lambda_rotation(x: float) -> np.ndarray:
    """Real rotation in the 1-2 plane with ``|U_11|^2 = x``."""
    c, s = np.sqrt(x), np.sqrt(1.0 - x)
    return np.array([[c, -s, 0], [s, c, 0], [0, 0, 1]], dtype=complex)


def vertex_outflow(sys: LindbladSystem, us, i: int) -> np.ndarray:
    """``f(U)``: total off-diagonal weight of column ``i`` of ``J(U)``."""
    js = j_matrices(sys, us)
    return js[:, :, i].sum(axis=1) - js[:, i, i]


def _unitary_from_params(p: np.ndarray, n: int) -> np.ndarray:
    from scipy.linalg import expm

    h = np.zeros((n, n), dtype=complex)
    iu = np.triu_indices(n, 1)
    k = len(iu[0])
    h[iu] = p[:k] + 1j * p[k:2 * k]
    h = h + dag(h)
    h[np.diag_indices(n)] = p[2 * k:]
    return expm(1j * h)


def derv_vertex_fstar(sys: LindbladSystem, i: int, sample_count: int = 2000, seed=0,
                      refine: int = 5) -> float:
    """Maximal outflow rate ``f*`` from the pure state ``e_i`` (single term only)."""
    if len(sys.terms) != 1:
        raise ValueError("f* is defined for a single Lindblad term")
    n = sys.n
    us = haar_unitaries(n, sample_count, seed)
    f = vertex_outflow(sys, us, i)
    best = float(f.max())
    starts = us[np.argsort(f)[::-1][:refine]]
    for u0 in starts:
        def neg(p, u0=u0):
            return -float(vertex_outflow(sys, (_unitary_from_params(p, n) @ u0)[None], i)[0])
        res = minimize(neg, np.zeros(n * n), method="BFGS", options={"gtol": 1e-10})
        best = max(best, -float(res.fun))
    return best
