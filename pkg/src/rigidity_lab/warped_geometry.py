"""Warped products ``dr^2 + phi(r)^2 h``, their conformal models and boundary geometry.

Closed forms are evaluated pointwise from the warp profile and its first two
derivatives. A finite-difference curvature oracle for arbitrary metric fields is
provided for cross-checking them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import bisect

Scalar = Callable[[float], float]


class DomainError(ValueError):
    """Argument outside the domain where a formula is defined."""


@dataclass(frozen=True)
class WarpProfile:
    """Positive warp function with its first two derivatives on ``[r_minus, r_plus]``."""

    phi: Scalar
    dphi: Scalar
    ddphi: Scalar
    r_minus: float
    r_plus: float
    name: str = "custom"

    def __post_init__(self) -> None:
        if not self.r_minus < self.r_plus:
            raise ValueError("profile interval must satisfy r_minus < r_plus")
        grid = np.linspace(self.r_minus, self.r_plus, 257)
        vals = np.array([self.phi(float(r)) for r in grid])
        if not np.all(vals > 0):
            raise ValueError(f"warp profile {self.name!r} must be positive on its interval")

    def check(self, r: float) -> float:
        span = self.r_plus - self.r_minus
        if r < self.r_minus - 1e-12 * span or r > self.r_plus + 1e-12 * span:
            raise DomainError(f"r = {r} outside [{self.r_minus}, {self.r_plus}]")
        return float(r)

    def log_derivative(self, r: float) -> float:
        """``phi'/phi``."""
        return self.dphi(r) / self.phi(r)

    def log_second_derivative(self, r: float) -> float:
        """``(phi'/phi)' = (log phi)''``."""
        p = self.phi(r)
        return self.ddphi(r) / p - (self.dphi(r) / p) ** 2


_ANALYTIC: dict[str, Callable[..., tuple[Scalar, Scalar, Scalar]]] = {
    "constant": lambda c=1.0: (lambda r: c, lambda r: 0.0, lambda r: 0.0),
    "exp": lambda a=1.0, c=1.0: (
        lambda r: c * math.exp(a * r),
        lambda r: a * c * math.exp(a * r),
        lambda r: a * a * c * math.exp(a * r),
    ),
    "linear": lambda a=1.0, b=0.0: (lambda r: a * r + b, lambda r: a, lambda r: 0.0),
    "sin": lambda: (math.sin, math.cos, lambda r: -math.sin(r)),
    "sinh": lambda: (math.sinh, math.cosh, math.sinh),
    "cosh": lambda: (math.cosh, math.sinh, math.cosh),
    "sech": lambda: (
        lambda r: 1.0 / math.cosh(r),
        lambda r: -math.tanh(r) / math.cosh(r),
        lambda r: (math.tanh(r) ** 2 - 1.0 / math.cosh(r) ** 2) / math.cosh(r),
    ),
}

ANALYTIC_KINDS = tuple(sorted(_ANALYTIC))


def analytic_profile(kind: str, interval: tuple[float, float], **params: float) -> WarpProfile:
    """Named closed-form profile, e.g. ``analytic_profile("exp", (0, 1), a=1.0)``."""
    if kind not in _ANALYTIC:
        raise ValueError(f"unknown profile kind {kind!r}; choose from {ANALYTIC_KINDS}")
    phi, dphi, ddphi = _ANALYTIC[kind](**params)
    return WarpProfile(phi, dphi, ddphi, float(interval[0]), float(interval[1]), name=kind)


def spline_profile(r: np.ndarray, phi: np.ndarray) -> WarpProfile:
    """Cubic-spline profile through samples; derivatives are those of the spline."""
    cs = CubicSpline(np.asarray(r, float), np.asarray(phi, float))
    d1, d2 = cs.derivative(1), cs.derivative(2)
    return WarpProfile(
        lambda t: float(cs(t)), lambda t: float(d1(t)), lambda t: float(d2(t)),
        float(r[0]), float(r[-1]), name="spline",
    )


@dataclass(frozen=True)
class WarpedMetricSpec:
    """``g0 = dr^2 + phi(r)^2 h`` on ``[r-, r+] x X`` with ``dim = n``.

    Only the fiber scalar curvature enters the closed forms; the flags record the
    fiber hypotheses used by the rigidity statements.
    """

    n: int
    profile: WarpProfile
    fiber_scalar_curvature: float | Scalar = 0.0
    fiber_ricci_positive: bool = False
    fiber_curvature_operator_nonneg: bool = True

    def __post_init__(self) -> None:
        if self.n <= 2:
            raise ValueError("warped product dimension must satisfy n > 2")

    def R_h(self, r: float) -> float:
        R = self.fiber_scalar_curvature
        return float(R(r)) if callable(R) else float(R)


def scalar_curvature_warped(spec: WarpedMetricSpec, r: float) -> float:
    """``R = R_h/phi^2 - n(n-1)(phi'/phi)^2 - 2(n-1)(phi'/phi)'``."""
    p = spec.profile
    r = p.check(r)
    n = spec.n
    lp = p.log_derivative(r)
    return spec.R_h(r) / p.phi(r) ** 2 - n * (n - 1) * lp**2 - 2 * (n - 1) * p.log_second_derivative(r)


def boundary_mean_curvature(spec: WarpedMetricSpec, side: str) -> float:
    """``H = +-(n-1) phi'(r+-)/phi(r+-)`` with respect to the inward unit normal."""
    p = spec.profile
    if side == "+":
        return (spec.n - 1) * p.log_derivative(p.r_plus)
    if side == "-":
        return -(spec.n - 1) * p.log_derivative(p.r_minus)
    raise ValueError("side must be '+' or '-'")


# ---------------------------------------------------------------- conformal model


def adaptive_simpson(f: Scalar, a: float, b: float, tol: float = 1e-10, max_depth: int = 50) -> float:
    """Adaptive Simpson quadrature with Richardson correction."""

    def simpson(fa: float, fm: float, fb: float, h: float) -> float:
        return h / 6.0 * (fa + 4.0 * fm + fb)

    def recurse(a, b, fa, fm, fb, whole, tol, depth):
        m = 0.5 * (a + b)
        lm, rm = 0.5 * (a + m), 0.5 * (m + b)
        flm, frm = f(lm), f(rm)
        left = simpson(fa, flm, fm, m - a)
        right = simpson(fm, frm, fb, b - m)
        delta = left + right - whole
        if depth <= 0 or abs(delta) <= 15.0 * tol:
            return left + right + delta / 15.0
        return (recurse(a, m, fa, flm, fm, left, tol / 2, depth - 1)
                + recurse(m, b, fm, frm, fb, right, tol / 2, depth - 1))

    if a == b:
        return 0.0
    fa, fb, fm = f(a), f(b), f(0.5 * (a + b))
    return recurse(a, b, fa, fm, fb, simpson(fa, fm, fb, b - a), tol, max_depth)


@dataclass(frozen=True)
class ConformalModel:
    """``g0 = psi(s)^2 (ds^2 + h)`` with ``s(r) = int_{r-}^r 1/phi``."""

    profile: WarpProfile
    nodes: np.ndarray
    s_nodes: np.ndarray
    quad_tol: float
    residual: float

    @property
    def s_max(self) -> float:
        return float(self.s_nodes[-1])

    def s_of_r(self, r: float) -> float:
        r = self.profile.check(r)
        k = int(np.clip(np.searchsorted(self.nodes, r) - 1, 0, len(self.nodes) - 2))
        inv = lambda t: 1.0 / self.profile.phi(t)
        return float(self.s_nodes[k]) + adaptive_simpson(inv, float(self.nodes[k]), r, self.quad_tol)

    def r_of_s(self, s: float) -> float:
        if s < -1e-14 or s > self.s_max + 1e-14:
            raise DomainError(f"s = {s} outside [0, {self.s_max}]")
        s = min(max(s, 0.0), self.s_max)
        k = int(np.clip(np.searchsorted(self.s_nodes, s) - 1, 0, len(self.nodes) - 2))
        lo, hi = float(self.nodes[k]), float(self.nodes[k + 1])
        if s <= self.s_nodes[k]:
            return lo
        if s >= self.s_nodes[k + 1]:
            return hi
        return bisect(lambda r: self.s_of_r(r) - s, lo, hi, xtol=1e-12, rtol=4 * np.finfo(float).eps,
                      maxiter=200)

    def psi(self, s: float) -> float:
        return self.profile.phi(self.r_of_s(s))

    def dpsi(self, s: float) -> float:
        """``dpsi/ds = phi'(r) phi(r)`` since ``dr/ds = phi``."""
        r = self.r_of_s(s)
        return self.profile.dphi(r) * self.profile.phi(r)

    def twist(self, s: float) -> float:
        """``psi'/psi^2``, the coefficient of the twisted connection."""
        return self.dpsi(s) / self.psi(s) ** 2


def twist_coefficient(psi: float, dpsi: float) -> float:
    """``psi'/psi^2`` from pointwise values."""
    return dpsi / psi**2


def reparametrize(spec: WarpedMetricSpec, quad_tol: float = 1e-10, nodes: int = 33,
                  samples: int = 65) -> ConformalModel:
    """Build the conformal model and report ``max |psi(s(r)) - phi(r)|`` as its residual.

    Raises
    ------
    RuntimeError
        If the computed ``s`` fails to be strictly increasing.
    """
    p = spec.profile
    grid = np.linspace(p.r_minus, p.r_plus, nodes)
    inv = lambda t: 1.0 / p.phi(t)
    pieces = [adaptive_simpson(inv, float(a), float(b), quad_tol / nodes) for a, b in zip(grid[:-1], grid[1:])]
    s_nodes = np.concatenate([[0.0], np.cumsum(pieces)])
    if not np.all(np.diff(s_nodes) > 0):
        raise RuntimeError("s(r) is not strictly increasing; warp profile inconsistent")
    model = ConformalModel(p, grid, s_nodes, quad_tol, 0.0)
    res = 0.0
    for r in np.linspace(p.r_minus, p.r_plus, samples):
        res = max(res, abs(model.psi(model.s_of_r(float(r))) - p.phi(float(r))))
    return ConformalModel(p, grid, s_nodes, quad_tol, res)


def pullback_residual(model: ConformalModel, samples: int = 33) -> float:
    """``max |psi(s(r))^2 (ds/dr)^2 - 1|`` and fiber-factor mismatch ``|psi^2 - phi^2|``."""
    p = model.profile
    worst = 0.0
    for r in np.linspace(p.r_minus, p.r_plus, samples):
        r = float(r)
        psi = model.psi(model.s_of_r(r))
        dsdr = 1.0 / p.phi(r)
        worst = max(worst, abs(psi**2 * dsdr**2 - 1.0), abs(psi**2 - p.phi(r) ** 2))
    return worst


@dataclass(frozen=True)
class LogConcavityReport:
    min_value: float
    log_concave: bool
    strict: bool


def log_concavity_report(profile: WarpProfile, samples: int = 201, tol: float = 1e-12) -> LogConcavityReport:
    """Minimum of ``-(log phi)''`` over a uniform grid and the resulting verdicts."""
    if samples < 2:
        raise ValueError("samples must be >= 2")
    grid = np.linspace(profile.r_minus, profile.r_plus, samples)
    vals = np.array([-profile.log_second_derivative(float(r)) for r in grid])
    lo = float(vals.min())
    return LogConcavityReport(lo, lo >= -tol, lo > tol)


def conformal_mean_curvature(H_bar: float, psi: float, dpsi_dn: float, n: int) -> float:
    """Mean curvature of ``psi^2 gbar``: ``H_bar/psi - (n-1) e_n(psi)/psi^2``.

    ``dpsi_dn`` is the derivative of ``psi`` along the inward ``gbar``-unit normal.
    """
    if psi <= 0:
        raise DomainError("conformal factor psi must be positive")
    return H_bar / psi - (n - 1) * dpsi_dn / psi**2


@dataclass(frozen=True)
class AngleSample:
    gamma: float
    dgamma_dr: float


def _angle(profile: WarpProfile, dtau: Scalar, r: float) -> float:
    t = dtau(r) * profile.phi(r)
    return math.acos(-t / math.sqrt(t * t + 1.0))


def _derivative(f: Scalar, step: float = 1e-6) -> Scalar:
    return lambda r: (f(r + step) - f(r - step)) / (2 * step)


def rotational_domain_angle(profile: WarpProfile, tau: Scalar, r: float,
                            dtau: Scalar | None = None, step: float = 1e-5) -> AngleSample:
    """Angle with ``cos(gamma) = -tau' phi / sqrt((tau' phi)^2 + 1)`` and its r-derivative.

    ``dtau`` defaults to a central difference of ``tau``; the derivative of the angle
    is always a central difference with the given ``step``.
    """
    r = profile.check(r)
    dt = dtau if dtau is not None else _derivative(tau)
    g = _angle(profile, dt, r)
    lo = max(profile.r_minus, r - step)
    hi = min(profile.r_plus, r + step)
    dg = (_angle(profile, dt, hi) - _angle(profile, dt, lo)) / (hi - lo)
    return AngleSample(g, dg)


def rotational_angle_profile(profile: WarpProfile, tau: Scalar, r_grid: np.ndarray,
                             dtau: Scalar | None = None) -> tuple[np.ndarray, np.ndarray, bool]:
    """Angles and derivatives on a grid plus the verdict ``gamma' < 0`` everywhere."""
    samples = [rotational_domain_angle(profile, tau, float(r), dtau) for r in r_grid]
    g = np.array([s.gamma for s in samples])
    dg = np.array([s.dgamma_dr for s in samples])
    return g, dg, bool(np.all(dg < 0))


# ------------------------------------------------------ half-space face geometry


@dataclass(frozen=True)
class UmbilicityReport:
    principal_curvatures: np.ndarray
    expected: float
    max_deviation: float


def _tangent_basis(N: np.ndarray) -> np.ndarray:
    """Orthonormal basis (columns) of the complement of the unit vector N."""
    n = N.shape[0]
    q, _ = np.linalg.qr(np.column_stack([N, np.eye(n)]))
    return q[:, 1:n]


def hyperbolic_face_umbilicity(N: np.ndarray, offset: float, sample_points: np.ndarray,
                               tol: float = 1e-9) -> UmbilicityReport:
    """Principal curvatures of ``{<N, x> = offset}`` in ``b = (x^1)^-2 delta``.

    For ``g = e^{2u} delta`` and constant tangent fields the second fundamental form
    is ``II(X, Y) = b(nabla_X Y, nu) = -e^u <X, Y> du(N)``; its eigenvalues relative
    to ``b`` are returned per sample, with ``u = -log x^1``.
    """
    N = np.asarray(N, float)
    if abs(np.linalg.norm(N) - 1) > 1e-12:
        raise ValueError("face normal must be a unit vector")
    pts = np.atleast_2d(np.asarray(sample_points, float))
    off = np.abs(pts @ N - offset)
    if np.any(off > tol):
        raise ValueError(f"sample point off the hyperplane by {off.max():.3e}")
    if np.any(pts[:, 0] <= 0):
        raise DomainError("sample points must satisfy x^1 > 0")
    E = _tangent_basis(N)
    out = []
    for x in pts:
        u = -math.log(x[0])
        grad_u = np.zeros_like(x)
        grad_u[0] = -1.0 / x[0]
        # Christoffel action on constant fields: X(u)Y + Y(u)X - <X,Y> grad u
        G = E.T @ E
        II = np.empty_like(G)
        for a in range(E.shape[1]):
            for c in range(E.shape[1]):
                X, Y = E[:, a], E[:, c]
                nabla = (X @ grad_u) * Y + (Y @ grad_u) * X - (X @ Y) * grad_u
                # b(Z, nu) with nu = e^{-u} N
                II[a, c] = math.exp(u) * (nabla @ N)
        gram_b = math.exp(2 * u) * G
        out.append(np.linalg.eigvalsh(np.linalg.solve(gram_b, II)))
    kappa = np.array(out)
    expected = float(N[0])
    return UmbilicityReport(kappa, expected, float(np.max(np.abs(kappa - expected))))


# ------------------------------------------------------ finite-difference oracle

MetricField = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class CurvatureSample:
    """Coordinate curvature at a point.

    ``riemann[a, b, c, d] = <R(d_c, d_d) d_b, d_a>`` so that the sectional curvature of
    the plane ``(d_a, d_b)`` is ``riemann[a, b, a, b] / |d_a ^ d_b|^2``.
    """

    metric: np.ndarray
    riemann: np.ndarray
    ricci: np.ndarray
    scalar: float


def fd_curvature(metric: MetricField, x: np.ndarray, step: float) -> CurvatureSample:
    """Curvature of a metric field from second-order central differences of ``g``."""
    x = np.asarray(x, float)
    n = x.size
    h = step
    E = np.eye(n) * h
    g = metric(x)
    gp = [metric(x + E[k]) for k in range(n)]
    gm = [metric(x - E[k]) for k in range(n)]
    dg = np.array([(gp[k] - gm[k]) / (2 * h) for k in range(n)])
    d2g = np.empty((n, n, n, n))
    for k in range(n):
        d2g[k, k] = (gp[k] - 2 * g + gm[k]) / h**2
        for l in range(k + 1, n):
            v = (metric(x + E[k] + E[l]) - metric(x + E[k] - E[l])
                 - metric(x - E[k] + E[l]) + metric(x - E[k] - E[l])) / (4 * h * h)
            d2g[k, l] = d2g[l, k] = v
    return curvature_from_jets(g, dg, d2g)


def curvature_from_jets(g: np.ndarray, dg: np.ndarray, d2g: np.ndarray) -> CurvatureSample:
    """Riemann, Ricci and scalar curvature from ``g``, ``dg[k] = d_k g`` and ``d2g[k, l]``."""
    ginv = np.linalg.inv(g)
    # first-kind symbols G1[l, i, j] = (d_i g_jl + d_j g_il - d_l g_ij) / 2
    G1 = 0.5 * (np.einsum("ijl->lij", dg) + np.einsum("jil->lij", dg) - dg)
    Gam = np.einsum("al,lij->aij", ginv, G1)
    dG1 = 0.5 * (np.einsum("mijl->mlij", d2g) + np.einsum("mjil->mlij", d2g) - d2g)
    dginv = -np.einsum("ab,mbc,cd->mad", ginv, dg, ginv)
    dGam = np.einsum("mal,lij->maij", dginv, G1) + np.einsum("al,mlij->maij", ginv, dG1)
    # R^a_{bcd} = d_c Gam^a_{db} - d_d Gam^a_{cb} + Gam^a_{ce} Gam^e_{db} - Gam^a_{de} Gam^e_{cb}
    Rup = (np.einsum("cadb->abcd", dGam) - np.einsum("dacb->abcd", dGam)
           + np.einsum("ace,edb->abcd", Gam, Gam) - np.einsum("ade,ecb->abcd", Gam, Gam))
    riemann = np.einsum("ae,ebcd->abcd", g, Rup)
    ricci = np.einsum("abad->bd", Rup)
    scalar = float(np.einsum("bd,bd->", ginv, ricci))
    return CurvatureSample(g, riemann, ricci, scalar)


def warped_metric_field(profile: WarpProfile, n: int, fiber: str = "torus") -> MetricField:
    """``dr^2 + phi(r)^2 h`` in coordinates ``(r, theta_1, ..)``.

    ``fiber`` is ``"torus"`` (flat ``h``) or ``"sphere"`` (round unit sphere in
    nested polar angles ``h = dt1^2 + sin^2 t1 (dt2^2 + ...)``).
    """
    if fiber not in ("torus", "sphere"):
        raise ValueError("fiber must be 'torus' or 'sphere'")

    def metric(x: np.ndarray) -> np.ndarray:
        p2 = profile.phi(float(x[0])) ** 2
        diag = np.empty(n)
        diag[0] = 1.0
        scale = p2
        for i in range(1, n):
            diag[i] = scale
            if fiber == "sphere":
                scale = scale * math.sin(x[i]) ** 2
        return np.diag(diag)

    return metric


def fiber_scalar_curvature(n: int, fiber: str) -> float:
    """Scalar curvature of the unit fiber of dimension ``n - 1``."""
    return 0.0 if fiber == "torus" else float((n - 1) * (n - 2))


def conformal_metric_field(factor: Callable[[np.ndarray], float]) -> MetricField:
    """``factor(x)^2 delta``."""
    return lambda x: factor(x) ** 2 * np.eye(x.size)


def hyperbolic_factor(x: np.ndarray) -> float:
    return 1.0 / x[0]


def hyperbolic_metric_field(x: np.ndarray) -> np.ndarray:
    return np.eye(x.size) / x[0] ** 2
