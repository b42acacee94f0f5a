"""Convex polytopes, their log-sum-exp smoothing and Gauss-map trace norms.

A polytope is ``{u_l <= 0}`` with ``u_l(x) = <a_l, x> - b_l`` and unit outward
normals ``a_l``. Its smoothing at parameter ``lam`` is ``{F <= 1}`` with
``F = sum_l exp(lam u_l)``; the unit normal of the smoothed boundary is the
normalized combination ``sum_l e^{lam u_l} a_l``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.optimize import linprog
from scipy.spatial import HalfspaceIntersection
from scipy.special import logsumexp

from .warped_geometry import conformal_mean_curvature

log = logging.getLogger(__name__)

UNIT_TOL = 1e-12


class PolytopeError(ValueError):
    """Invalid or degenerate polytope description."""


class BracketingError(RuntimeError):
    """A ray from the interior point never reaches the smoothed boundary."""


def _lp(c, A_ub, b_ub, A_eq=None, b_eq=None, bounds=None):
    n = len(c)
    bounds = [(None, None)] * n if bounds is None else bounds
    return linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq, bounds=bounds, method="highs")


@dataclass(frozen=True)
class ConvexPolytope:
    """``{x : A x <= b}`` with unit rows of ``A`` and a strictly interior point."""

    A: np.ndarray
    b: np.ndarray
    interior_point: np.ndarray
    bounded: bool = True

    def __post_init__(self) -> None:
        A = np.atleast_2d(np.asarray(self.A, float))
        b = np.asarray(self.b, float).reshape(-1)
        p = np.asarray(self.interior_point, float)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "interior_point", p)
        if A.shape[0] != b.size or A.shape[1] != p.size:
            raise PolytopeError("facet data and interior point have inconsistent shapes")
        norms = np.linalg.norm(A, axis=1)
        if np.any(np.abs(norms - 1) > UNIT_TOL):
            raise PolytopeError("facet normals must be unit vectors (use ConvexPolytope.from_halfspaces)")
        if np.any(self.u(p) >= 0):
            raise PolytopeError("interior point violates or touches a facet")
        for i in range(len(b)):
            for j in range(i + 1, len(b)):
                if A[i] @ A[j] > 1 - 1e-12:
                    raise PolytopeError(f"facets {i} and {j} are parallel duplicates")
        n = p.size
        for i in range(len(b)):
            others = [k for k in range(len(b)) if k != i]
            if not others:
                break
            res = _lp(-A[i], A[others], b[others])
            if res.status == 0 and -res.fun <= b[i] + 1e-12:
                raise PolytopeError(f"facet {i} is redundant (never active)")
        if self.bounded:
            for k in range(n):
                for s in (1.0, -1.0):
                    c = np.zeros(n)
                    c[k] = -s
                    if _lp(c, A, b).status == 3:
                        raise PolytopeError("polytope is unbounded")

    @classmethod
    def from_halfspaces(cls, normals: np.ndarray, offsets: np.ndarray, interior_point: np.ndarray,
                        bounded: bool = True) -> "ConvexPolytope":
        """Normalize rows ``<N, x> <= c`` before construction."""
        N = np.atleast_2d(np.asarray(normals, float))
        c = np.asarray(offsets, float)
        s = np.linalg.norm(N, axis=1)
        return cls(N / s[:, None], c / s, interior_point, bounded)

    @classmethod
    def box(cls, lo: np.ndarray, hi: np.ndarray) -> "ConvexPolytope":
        lo, hi = np.asarray(lo, float), np.asarray(hi, float)
        n = lo.size
        I = np.eye(n)
        A = np.vstack([I, -I])
        b = np.r_[hi, -lo]
        return cls(A, b, 0.5 * (lo + hi))

    @property
    def n(self) -> int:
        return self.interior_point.size

    @property
    def n_facets(self) -> int:
        return self.b.size

    def u(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(x, float) @ self.A.T - self.b

    def vertices(self) -> np.ndarray:
        if not self.bounded:
            raise PolytopeError("unbounded polytope has no vertex list")
        hs = HalfspaceIntersection(np.column_stack([self.A, -self.b]), self.interior_point)
        v = hs.intersections
        # merge duplicates produced by degenerate vertices
        key = np.round(v, 9)
        _, idx = np.unique(key, axis=0, return_index=True)
        return v[np.sort(idx)]


# ------------------------------------------------------------------ smoothing


def smoothing_log(poly: ConvexPolytope, lam: float, x: np.ndarray) -> np.ndarray:
    """``log F = logsumexp(lam u)``; the smoothed boundary is its zero set."""
    return logsumexp(lam * poly.u(x), axis=-1)


@dataclass(frozen=True)
class SmoothedBoundary:
    """Boundary samples with unit normals and shape operators.

    ``frames[k]`` is an ``n x (n-1)`` orthonormal tangent basis at ``points[k]``;
    ``dN[k]`` is the matrix of the Gauss-map differential in that basis.
    """

    lam: float
    points: np.ndarray
    normals: np.ndarray
    grad_norm: np.ndarray
    frames: np.ndarray
    dN: np.ndarray
    tangent_hessian: np.ndarray
    F_residual: np.ndarray
    u_max: np.ndarray
    n_facets: int

    @property
    def H(self) -> np.ndarray:
        return np.trace(self.dN, axis1=-2, axis2=-1)


def _tangent_frame(N: np.ndarray) -> np.ndarray:
    n = N.size
    q, _ = np.linalg.qr(np.column_stack([N, np.eye(n)]))
    E = q[:, 1:n]
    return E


def _assemble(lam: float, points: np.ndarray, grads: np.ndarray, hessians: np.ndarray,
              F_residual: np.ndarray, u_max: np.ndarray, n_facets: int) -> SmoothedBoundary:
    gn = np.linalg.norm(grads, axis=1)
    normals = grads / gn[:, None]
    frames = np.stack([_tangent_frame(N) for N in normals])
    tan_hess = np.einsum("kia,kij,kjb->kab", frames, hessians, frames)
    dN = tan_hess / gn[:, None, None]
    return SmoothedBoundary(lam, points, normals, gn, frames, dN, tan_hess, F_residual, u_max, n_facets)


def _ray_root(g: Callable[[float], float], dg: Callable[[float], float]) -> float:
    """Root of an increasing function with ``g(0) < 0``: doubling, 80 bisections, Newton polish."""
    lo, hi = 0.0, 1.0
    for _ in range(200):
        if g(hi) > 0:
            break
        lo, hi = hi, 2 * hi
    else:
        raise BracketingError("ray does not cross the smoothed boundary")
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if g(mid) > 0:
            hi = mid
        else:
            lo = mid
    t = 0.5 * (lo + hi)
    for _ in range(3):
        d = dg(t)
        if d <= 0:
            break
        t_new = t - g(t) / d
        if not lo - (hi - lo) <= t_new <= hi + (hi - lo):
            break
        t = t_new
    return t


def boundary_sample(poly: ConvexPolytope, lam: float, directions: np.ndarray) -> SmoothedBoundary:
    """Intersect rays from the interior point with ``{F = 1}`` and attach the geometry.

    Raises
    ------
    ValueError
        If ``lam <= 0`` or the interior point is not inside the smoothed domain.
    BracketingError
        If some ray never leaves the smoothed domain.
    """
    if lam <= 0:
        raise ValueError("smoothing parameter must be positive")
    p = poly.interior_point
    if smoothing_log(poly, lam, p) >= 0:
        raise ValueError("interior point lies outside the smoothed domain; increase lam")
    D = np.atleast_2d(np.asarray(directions, float))
    D = D / np.linalg.norm(D, axis=1, keepdims=True)
    pts = []
    for d in D:
        def g(t: float, d=d) -> float:
            return float(smoothing_log(poly, lam, p + t * d))

        def dg(t: float, d=d) -> float:
            u = lam * poly.u(p + t * d)
            w = np.exp(u - logsumexp(u))
            return float(lam * (w @ (poly.A @ d)))

        pts.append(p + _ray_root(g, dg) * d)
    return smoothed_geometry(poly, lam, np.array(pts))


def smoothed_geometry(poly: ConvexPolytope, lam: float, points: np.ndarray) -> SmoothedBoundary:
    """Analytic gradient and Hessian of ``F`` at given boundary points."""
    U = lam * poly.u(points)
    E = np.exp(U)
    A = poly.A
    grads = lam * E @ A
    hess = lam**2 * np.einsum("kl,li,lj->kij", E, A, A)
    F_res = np.expm1(logsumexp(U, axis=1))
    return _assemble(lam, points, grads, hess, F_res, poly.u(points).max(axis=1), poly.n_facets)


def sphere_boundary(center: np.ndarray, radius: float, directions: np.ndarray) -> SmoothedBoundary:
    """Exact round sphere written as ``{|x - c|^2 / R^2 = 1}`` (oracle bypassing smoothing)."""
    c = np.asarray(center, float)
    D = np.atleast_2d(np.asarray(directions, float))
    D = D / np.linalg.norm(D, axis=1, keepdims=True)
    pts = c + radius * D
    grads = 2 * (pts - c) / radius**2
    hess = np.broadcast_to(2 * np.eye(c.size) / radius**2, (len(pts), c.size, c.size)).copy()
    res = np.sum((pts - c) ** 2, axis=1) / radius**2 - 1
    return _assemble(np.inf, pts, grads, hess, res, np.full(len(pts), np.nan), 0)


def sphere_directions(n: int, count: int, seed: int = 0) -> np.ndarray:
    """Seeded Gaussian directions on the unit sphere."""
    v = np.random.default_rng(seed).standard_normal((count, n))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


# ------------------------------------------------------------------ trace norms


def gram_singular_values(L: np.ndarray, G_domain: np.ndarray, G_target: np.ndarray | None = None) -> np.ndarray:
    """Singular values of ``L`` relative to inner products ``G_domain`` and ``G_target``."""

    def sqrt_psd(G: np.ndarray, inverse: bool) -> np.ndarray:
        w, V = np.linalg.eigh(0.5 * (G + G.T))
        if np.any(w <= 0):
            raise ValueError("Gram matrix must be positive definite")
        p = -0.5 if inverse else 0.5
        return (V * w**p) @ V.T

    M = L @ sqrt_psd(G_domain, True)
    if G_target is not None:
        M = sqrt_psd(G_target, False) @ M
    return np.linalg.svd(M, compute_uv=False)


MetricLike = str | Callable[[np.ndarray], np.ndarray]


def _domain_gram(metric: MetricLike, x: np.ndarray, E: np.ndarray) -> np.ndarray:
    if metric == "euclidean":
        return np.eye(E.shape[1])
    if metric == "hyperbolic":
        if x[0] <= 0:
            raise ValueError("hyperbolic metric needs x^1 > 0")
        return np.eye(E.shape[1]) / x[0] ** 2
    if callable(metric):
        return E.T @ metric(x) @ E
    raise ValueError(f"unknown metric {metric!r}")


@dataclass(frozen=True)
class TraceNormSample:
    q: np.ndarray
    trace_norm: np.ndarray


def trace_norm_dN(sb: SmoothedBoundary, metric: MetricLike = "euclidean") -> TraceNormSample:
    """Singular values ``q_i`` of ``dN`` and ``sum_i q_i`` per sample.

    The boundary carries ``metric`` and the unit sphere its round metric.
    """
    qs = np.array([gram_singular_values(dN, _domain_gram(metric, x, E))
                   for x, E, dN in zip(sb.points, sb.frames, sb.dN)])
    return TraceNormSample(qs, qs.sum(axis=1))


def smoothed_mean_curvature(sb: SmoothedBoundary) -> np.ndarray:
    """Euclidean mean curvature (trace of the shape operator) per sample."""
    return sb.H


def hyperbolic_mean_curvature(sb: SmoothedBoundary) -> np.ndarray:
    """Mean curvature in ``b = (x^1)^-2 delta`` with respect to the outward normal.

    Equals ``x^1 H_delta - (n-1) N^1``.
    """
    n = sb.points.shape[1]
    out = []
    for x, N, H in zip(sb.points, sb.normals, sb.H):
        psi = 1.0 / x[0]
        # derivative of psi along the inward unit normal -N
        dpsi_in = -N[0] * (-1.0 / x[0] ** 2)
        out.append(conformal_mean_curvature(H, psi, dpsi_in, n))
    return np.array(out)


def boundary_defect_hyperbolic(sb: SmoothedBoundary) -> np.ndarray:
    """``H_b + (n-1) <d_{x^1}, N> - ||dN||_{tr, b}`` per sample.

    With the outward normal this equals ``x^1 (H_delta - ||dN||_{tr, delta})``.
    """
    n = sb.points.shape[1]
    if np.any(sb.points[:, 0] <= 0):
        raise ValueError("samples must lie in the half-space x^1 > 0")
    Hb = hyperbolic_mean_curvature(sb)
    tn = trace_norm_dN(sb, "hyperbolic").trace_norm
    return Hb + (n - 1) * sb.normals[:, 0] - tn


# ------------------------------------------------------------------ angles and cones


@dataclass(frozen=True)
class EdgeReport:
    i: int
    j: int
    euclidean_angle: float
    metric_angle: float | None
    residual: float | None
    witness: np.ndarray


def _face_witness(poly: ConvexPolytope, active: list[int]) -> tuple[float, np.ndarray]:
    """Max slack point of the face where ``active`` facets are tight."""
    n = poly.n
    others = [k for k in range(poly.n_facets) if k not in active]
    c = np.zeros(n + 1)
    c[-1] = -1.0
    A_ub = np.column_stack([poly.A[others], np.ones(len(others))]) if others else None
    b_ub = poly.b[others] if others else None
    A_eq = np.column_stack([poly.A[active], np.zeros(len(active))])
    bounds = [(None, None)] * n + [(None, 1.0)]
    res = _lp(c, A_ub, b_ub, A_eq, poly.b[active], bounds)
    if res.status != 0:
        return -np.inf, np.full(n, np.nan)
    return -res.fun, res.x[:n]


def adjacent_pairs(poly: ConvexPolytope, tol: float = 1e-9) -> list[tuple[int, int]]:
    """Facet pairs sharing a codimension-two face with nonempty relative interior."""
    out = []
    for i in range(poly.n_facets):
        for j in range(i + 1, poly.n_facets):
            slack, _ = _face_witness(poly, [i, j])
            if slack > tol:
                out.append((i, j))
    return out


def dihedral_and_matching(poly: ConvexPolytope, g_metric: Callable[[np.ndarray], np.ndarray] | None = None,
                          pairs: list[tuple[int, int]] | None = None) -> list[EdgeReport]:
    """Euclidean dihedral angles ``cos = -<N_i, N_j>`` and the matching residual
    ``|g(nu_i, nu_j) - <N_i, N_j>|`` at a relative-interior point of each shared face.

    Raises
    ------
    ValueError
        If a requested pair is not adjacent.
    """
    adj = adjacent_pairs(poly)
    pairs = adj if pairs is None else [tuple(sorted(p)) for p in pairs]
    out = []
    for i, j in pairs:
        slack, w = _face_witness(poly, [i, j])
        if slack <= 1e-9:
            raise ValueError(f"facets {i} and {j} are not adjacent")
        Ni, Nj = poly.A[i], poly.A[j]
        eu = float(Ni @ Nj)
        angle = math.acos(max(-1.0, min(1.0, -eu)))
        if g_metric is None:
            out.append(EdgeReport(i, j, angle, None, None, w))
            continue
        Ginv = np.linalg.inv(g_metric(w))
        # g-unit normal vectors are G^{-1} a / |a|_{G^{-1}}; their g-product follows
        gij = (Ni @ Ginv @ Nj) / math.sqrt((Ni @ Ginv @ Ni) * (Nj @ Ginv @ Nj))
        mang = math.acos(max(-1.0, min(1.0, -gij)))
        out.append(EdgeReport(i, j, angle, mang, abs(gij - eu), w))
    return out


@dataclass(frozen=True)
class ConeReport:
    p0: np.ndarray
    active: list[int]
    coefficients: np.ndarray
    residual: float
    nu0_norm: float
    unique: bool


def highest_point_cone(poly: ConvexPolytope, axis: int = 0, face_tol: float = 1e-9) -> ConeReport:
    """Highest point in the ``x^1`` direction and the cone decomposition of ``N0 = e_1``.

    ``p0`` is a relative-interior point of the top face, the active set lists facets
    tight on the whole face, and ``N0 = sum a_i N_i`` is solved by least squares. The
    ``b``-norm of ``nu0 = sum a_i nu_i`` with ``nu_i = x^1 N_i`` is reported.
    """
    n = poly.n
    e = np.zeros(n)
    e[axis] = 1.0
    top = _lp(-e, poly.A, poly.b)
    if top.status == 3:
        raise PolytopeError("polytope is unbounded in the height direction")
    z = -top.fun
    A_eq, b_eq = e[None, :], np.array([z])
    active, minimizers = [], []
    for k in range(poly.n_facets):
        res = _lp(poly.A[k], poly.A, poly.b, A_eq, b_eq)
        if res.fun - poly.b[k] > -face_tol:
            active.append(k)
        else:
            minimizers.append(res.x)
    p0 = np.mean(minimizers, axis=0) if minimizers else top.x
    if not active:
        raise PolytopeError("no facet is active at the highest point")
    M = poly.A[active].T
    coef, *_ = np.linalg.lstsq(M, e, rcond=None)
    rank = np.linalg.matrix_rank(M, tol=1e-10)
    resid = float(np.linalg.norm(M @ coef - e))
    nu0 = p0[axis] * (M @ coef)
    return ConeReport(p0, active, coef, resid, float(np.linalg.norm(nu0) / p0[axis]), rank == len(active))


# ------------------------------------------------------------------ trace norm comparison


@dataclass(frozen=True)
class TraceNormComparison:
    tn1: float
    tn2: float
    mc_max: float | None


def random_orthogonal(n: int, count: int, rng: np.random.Generator, center: np.ndarray | None = None,
                      spread: float = 1.0) -> np.ndarray:
    """Orthogonal factors of QR decompositions of Gaussian matrices, sign-fixed diagonal.

    With ``center=None`` the Gaussians are standard and the result is Haar distributed.
    Otherwise the Gaussians have mean ``I`` and standard deviation ``spread`` and the
    orthogonal factors are composed with ``center``, concentrating near it.
    """
    Z = rng.standard_normal((count, n, n))
    if center is not None:
        Z = np.eye(n) + spread * Z
    Q, R = np.linalg.qr(Z)
    d = np.sign(np.diagonal(R, axis1=-2, axis2=-1))
    d[d == 0] = 1.0
    Q = Q * d[:, None, :]
    return Q if center is None else center @ Q


def trace_norm_comparison(L: np.ndarray, mu: np.ndarray, mc_samples: int = 0,
                          rng: np.random.Generator | None = None, adaptive: bool = True,
                          rounds: int = 20) -> TraceNormComparison:
    """Trace norms of ``L`` for the identity and for ``diag(mu)`` with ``mu_i >= 1``.

    Both are ``sup_Q tr(S Q L)`` over orthogonal ``Q`` with ``S = I`` and
    ``S = diag(mu^-1/2)``, i.e. the nuclear norms of ``L`` and ``L S``. ``mc_max`` is the
    largest ``tr(S Q L)`` over ``mc_samples`` random orthogonal ``Q``. With
    ``adaptive`` a fifth of the budget is Haar distributed and the rest is spent in
    ``rounds`` batches concentrated around the best sample so far with geometrically
    shrinking spread.
    """
    L = np.asarray(L, float)
    mu = np.asarray(mu, float)
    if np.any(mu < 1):
        raise ValueError("all mu_i must be >= 1")
    if abs(np.linalg.det(L)) < 1e-14 * max(1.0, np.abs(L).max()) ** L.shape[0]:
        raise ValueError("L must be invertible")
    S = np.diag(mu**-0.5)
    tn1 = float(np.linalg.svd(L, compute_uv=False).sum())
    tn2 = float(np.linalg.svd(L @ S, compute_uv=False).sum())
    if mc_samples <= 0:
        return TraceNormComparison(tn1, tn2, None)
    rng = np.random.default_rng(0) if rng is None else rng
    n = L.shape[0]
    M = S @ L.T  # tr(S Q L) = sum_ij Q_ij M_ij

    def best_of(Q: np.ndarray) -> tuple[float, np.ndarray]:
        vals = np.einsum("kij,ij->k", Q, M)
        k = int(np.argmax(vals))
        return float(vals[k]), Q[k]

    if not adaptive:
        return TraceNormComparison(tn1, tn2, best_of(random_orthogonal(n, mc_samples, rng))[0])
    first = max(2, mc_samples // 5)
    Q0 = random_orthogonal(n, first, rng)
    vals = np.einsum("kij,ij->k", Q0, M)
    dets = np.sign(np.linalg.det(Q0))
    best = float(vals.max())
    left = mc_samples - first
    # local moves never change det(Q), so each component is refined separately
    for comp, sign in enumerate((1.0, -1.0)):
        mask = dets == sign
        if not mask.any():
            continue
        k0 = int(np.flatnonzero(mask)[np.argmax(vals[mask])])
        cbest, Qb = float(vals[k0]), Q0[k0]
        budget = left // (2 - comp)
        left -= budget
        spread = 0.5
        for r in range(rounds):
            k = budget // (rounds - r)
            budget -= k
            if k:
                val, Q = best_of(random_orthogonal(n, k, rng, center=Qb, spread=spread))
                if val > cbest:
                    cbest, Qb = val, Q
            spread *= 0.7
        best = max(best, cbest)
    return TraceNormComparison(tn1, tn2, best)


# ------------------------------------------------------------------ convergence


def _project_onto_smoothed(poly: ConvexPolytope, lam: float, v: np.ndarray, x0: np.ndarray) -> np.ndarray:
    """Nearest point of ``{G <= 0}``, ``G = logsumexp(lam u) / lam``, to an outside point.

    Newton iteration on the KKT system ``x + t grad G(x) = v``, ``G(x) = 0``.
    """
    n = poly.n
    x = x0.copy()
    t = float(np.linalg.norm(v - x))
    for _ in range(100):
        U = lam * poly.u(x)
        w = np.exp(U - logsumexp(U))
        G = logsumexp(U) / lam
        gG = w @ poly.A
        Am = poly.A - gG
        HG = lam * np.einsum("l,li,lj->ij", w, Am, Am)
        r = np.r_[x + t * gG - v, G]
        if np.linalg.norm(r) < 1e-14:
            break
        J = np.zeros((n + 1, n + 1))
        J[:n, :n] = np.eye(n) + t * HG
        J[:n, n] = gG
        J[n, :n] = gG
        step = np.linalg.solve(J, -r)
        x = x + step[:n]
        t = t + step[n]
    return x


@dataclass(frozen=True)
class ConvergenceRow:
    lam: float
    hausdorff: float
    normal_deviation: float
    defect_max: float


def facet_witnesses(poly: ConvexPolytope) -> np.ndarray:
    """A relative-interior point of each facet (maximal slack to the other facets)."""
    return np.array([_face_witness(poly, [k])[1] for k in range(poly.n_facets)])


def smoothing_convergence(poly: ConvexPolytope, lam_list: list[float], sample_budget: int = 64,
                          seed: int = 0) -> list[ConvergenceRow]:
    """Hausdorff distance between ``dOmega_lam`` and ``dOmega`` and facet normal deviation.

    For nested convex bodies the Hausdorff distance is the largest distance from a
    vertex of the polytope to the smoothed body; it is combined with the distance of
    sampled smoothed boundary points to the polytope boundary.
    """
    if any(b <= a for a, b in zip(lam_list, lam_list[1:])):
        raise ValueError("lam_list must be increasing")
    p = poly.interior_point
    V = poly.vertices() if poly.bounded else np.zeros((0, poly.n))
    W = facet_witnesses(poly)
    dirs = sphere_directions(poly.n, sample_budget, seed)
    if not poly.bounded:
        dirs = dirs[dirs @ poly.A.sum(axis=0) > 0.1]
    rows = []
    for lam in lam_list:
        sb = boundary_sample(poly, lam, dirs)
        inner = float(np.max(-sb.u_max)) if len(sb.points) else 0.0
        outer = 0.0
        if len(V):
            crossings = boundary_sample(poly, lam, V - p).points
            for v, x0 in zip(V, crossings):
                x = _project_onto_smoothed(poly, lam, v, x0)
                outer = max(outer, float(np.linalg.norm(v - x)))
        wb = boundary_sample(poly, lam, W - p)
        dev = float(np.max(np.linalg.norm(wb.normals - poly.A, axis=1)))
        defect = 0.0
        if np.all(sb.points[:, 0] > 0):
            defect = float(np.max(np.abs(boundary_defect_hyperbolic(sb))))
        rows.append(ConvergenceRow(float(lam), max(inner, outer), dev, defect))
    return rows
