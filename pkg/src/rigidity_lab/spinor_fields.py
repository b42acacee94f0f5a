"""Imaginary Killing spinor m-tuples on the half-space model ``b = (x^1)^-2 delta``.

Spinors are expressed in the orthonormal frame ``e_i = x^1 d_i``. A field is an
array of shape ``(*grid, m, m)`` whose column ``alpha`` is the spinor ``s_alpha``;
columns are ordered so that ``omega_N0`` is ``diag(+1, .., -1, ..)``, which makes the
sign of each Killing equation a function of the column index.

Killing equation (per column, ``lam = +1`` for the first half, ``-1`` otherwise)::

    nabla_{e_i} s = (lam / 2) B_i s,   B_i = eps gamma_i (n even),  -i gamma_i (n odd)
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .clifford import CliffordRep, omega_matrix
from .warped_geometry import DomainError


# ------------------------------------------------------------------ geometry


@dataclass(frozen=True)
class GridDomain:
    """Axis-aligned box ``prod [lo_i, hi_i]`` sampled with uniform step ``h``."""

    n: int
    lo: tuple[float, ...]
    hi: tuple[float, ...]
    h: float

    def __post_init__(self) -> None:
        if len(self.lo) != self.n or len(self.hi) != self.n:
            raise ValueError("box bounds must have n entries")
        if self.h <= 0:
            raise ValueError("grid step must be positive")
        if self.lo[0] <= 0:
            raise DomainError("half-space domain needs x^1_min > 0")
        for a, b in zip(self.lo, self.hi):
            k = (b - a) / self.h
            if b <= a or abs(k - round(k)) > 1e-9 * max(1.0, k):
                raise ValueError("each box side must be a positive multiple of h")

    @property
    def axes(self) -> list[np.ndarray]:
        return [a + self.h * np.arange(int(round((b - a) / self.h)) + 1)
                for a, b in zip(self.lo, self.hi)]

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(len(a) for a in self.axes)

    def x1(self) -> np.ndarray:
        """``x^1`` broadcastable against the grid shape."""
        ax = self.axes[0]
        return ax.reshape((-1,) + (1,) * (self.n - 1))

    def point(self, index: tuple[int, ...]) -> np.ndarray:
        return np.array([ax[i] for ax, i in zip(self.axes, index)])

    def index_of(self, x: np.ndarray) -> tuple[int, ...]:
        idx = []
        for ax, xi in zip(self.axes, x):
            k = int(round((xi - ax[0]) / self.h))
            if k < 0 or k >= len(ax) or abs(ax[k] - xi) > 1e-9:
                raise ValueError(f"point {x} is not a grid node")
            idx.append(k)
        return tuple(idx)

    def refine(self) -> "GridDomain":
        return GridDomain(self.n, self.lo, self.hi, self.h / 2)

    @property
    def faces(self) -> list[str]:
        return [f"x{i + 1}{s}" for i in range(self.n) for s in "-+"]


def default_signs(m: int) -> np.ndarray:
    """``+1`` for the first ``m/2`` columns and ``-1`` for the rest."""
    return np.r_[np.ones(m // 2), -np.ones(m - m // 2)]


def killing_generators(rep: CliffordRep) -> np.ndarray:
    """Hermitian matrices ``B_i`` of the Killing term, shape ``(n, m, m)``."""
    if rep.even:
        return np.einsum("ab,ibc->iac", rep.grading, rep.generators)
    return -1j * rep.generators


def spin_connection(rep: CliffordRep, grad_u: np.ndarray, axis: int) -> np.ndarray:
    """Coordinate spin connection of ``e^{2u} delta`` along ``d_axis``.

    ``A = (c(du) gamma_axis - gamma_axis c(du)) / 4``, so that
    ``nabla_{d_axis} = d_axis + A`` on frame components.
    """
    cu = rep.gamma(np.asarray(grad_u, float))
    g = rep.generators[axis]
    return 0.25 * (cu @ g - g @ cu)


def hyperbolic_spin_connection(rep: CliffordRep, x: np.ndarray, axis: int) -> np.ndarray:
    """Spin connection of ``b = (x^1)^-2 delta``: ``(gamma_i gamma_1 - gamma_1 gamma_i) / (4 x^1)``."""
    x = np.asarray(x, float)
    if x[0] <= 0:
        raise DomainError("hyperbolic spin connection needs x^1 > 0")
    du = np.zeros(rep.n)
    du[0] = -1.0 / x[0]
    return spin_connection(rep, du, axis)


@dataclass(frozen=True)
class KillingSystem:
    """Right-hand sides of the Killing transport in coordinate directions.

    ``d S / d x^i = (-Ahat_i S + 0.5 B_i S diag(signs)) / x^1`` with
    ``Ahat_i = (gamma_i gamma_1 - gamma_1 gamma_i) / 4``.
    """

    rep: CliffordRep
    signs: np.ndarray
    A: np.ndarray = field(init=False, repr=False)
    B: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        g = self.rep.generators
        A = 0.25 * (np.einsum("iab,bc->iac", g, g[0]) - np.einsum("ab,ibc->iac", g[0], g))
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", killing_generators(self.rep))

    def rhs(self, axis: int, x1: np.ndarray | float, S: np.ndarray) -> np.ndarray:
        out = -self.A[axis] @ S + 0.5 * (self.B[axis] @ S) * self.signs
        return out / np.asarray(x1)[..., None, None] if np.ndim(x1) else out / x1

    def rhs_direction(self, v: np.ndarray, x1: float, S: np.ndarray) -> np.ndarray:
        M = np.einsum("i,iab->ab", v, -self.A)
        K = np.einsum("i,iab->ab", v, self.B)
        return (M @ S + 0.5 * (K @ S) * self.signs) / x1


def _rk4_step(f: Callable[[float, np.ndarray], np.ndarray], t: float, y: np.ndarray, dt: float) -> np.ndarray:
    k1 = f(t, y)
    k2 = f(t + dt / 2, y + dt / 2 * k1)
    k3 = f(t + dt / 2, y + dt / 2 * k2)
    k4 = f(t + dt, y + dt * k3)
    return y + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


def killing_transport(rep: CliffordRep, sign: float | np.ndarray, s0: np.ndarray, path: np.ndarray,
                      steps: int) -> np.ndarray:
    """Integrate the Killing equation along a polyline with classical RK4.

    Parameters
    ----------
    sign : float or array
        ``+1`` solves ``nabla s = +1/2 B s``, ``-1`` the opposite equation; an array
        applies per column when ``s0`` is an ``(m, k)`` matrix.
    path : array (p, n)
        Vertices of the polyline; each segment gets ``steps`` RK4 steps.
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    path = np.atleast_2d(np.asarray(path, float))
    if np.any(path[:, 0] <= 0):
        raise DomainError("transport path leaves the half-space x^1 > 0")
    vec = np.asarray(s0, complex)
    single = vec.ndim == 1
    S = vec[:, None] if single else vec.copy()
    signs = np.broadcast_to(np.asarray(sign, float), (S.shape[1],))
    sys = KillingSystem(rep, np.asarray(signs))
    for a, b in zip(path[:-1], path[1:]):
        d = b - a
        f = lambda t, y: sys.rhs_direction(d, a[0] + t * d[0], y)
        dt = 1.0 / steps
        for k in range(steps):
            S = _rk4_step(f, k * dt, S, dt)
    return S[:, 0] if single else S


# ------------------------------------------------------------------ fields


@dataclass(frozen=True)
class SpinorMTuple:
    """Sampled m-tuple ``s = (s_1, .., s_m)``; ``data[..., :, alpha] = s_alpha``."""

    domain: GridDomain
    rep: CliffordRep
    data: np.ndarray = field(repr=False)
    signs: np.ndarray
    base_index: tuple[int, ...]

    @property
    def m(self) -> int:
        return self.rep.m


def adapted_initial_data(rep: CliffordRep, nu0: np.ndarray) -> np.ndarray:
    """Unitary columns adapted to ``nu0``: first half in the ``-1`` eigenspace of
    ``omega_nu0``-type operator ``B(nu0)``, second half in its ``+1`` eigenspace.

    Fields transported from this data have a Gram matrix proportional to the identity.
    """
    Bn = np.einsum("i,iab->ab", np.asarray(nu0, float), killing_generators(rep))
    vals, vecs = np.linalg.eigh(Bn)
    return vecs[:, np.argsort(vals, kind="stable")]


def build_killing_basis(rep: CliffordRep, domain: GridDomain, base: np.ndarray,
                        initial: np.ndarray | None = None, signs: np.ndarray | None = None) -> SpinorMTuple:
    """Transport initial data from ``base`` over the whole grid.

    Lines along ``x^1`` through the base are integrated first, then lines along
    ``x^2`` through them, and so on; every step is one RK4 step of size ``h``.
    """
    if rep.n != domain.n:
        raise ValueError("representation and domain dimensions differ")
    m = rep.m
    signs = default_signs(m) if signs is None else np.asarray(signs, float)
    S0 = np.eye(m, dtype=complex) if initial is None else np.asarray(initial, complex)
    base_idx = domain.index_of(np.asarray(base, float))
    sys = KillingSystem(rep, signs)
    data = np.zeros(domain.shape + (m, S0.shape[1]), dtype=complex)
    data[base_idx] = S0
    axes = domain.axes
    h = domain.h
    for k in range(domain.n):
        sl = tuple(slice(None) if j <= k else base_idx[j] for j in range(domain.n))
        sub = np.moveaxis(data[sl], k, 0)
        if k == 0:
            x1_line = lambda j, t: axes[0][j] + t
        else:
            x1 = axes[0].reshape((-1,) + (1,) * (k - 1))
            x1_line = lambda j, t, x1=x1: x1
        for sgn in (+1, -1):
            j = base_idx[k]
            stop = sub.shape[0] - 1 if sgn > 0 else 0
            while j != stop:
                jj = j
                f = lambda t, y: sys.rhs(k, x1_line(jj, t), y)
                sub[j + sgn] = _rk4_step(f, 0.0, sub[j], sgn * h)
                j += sgn
    return SpinorMTuple(domain, rep, data, signs, base_idx)


def _central(data: np.ndarray, axis: int, h: float) -> np.ndarray:
    """Central difference along ``axis`` restricted to the interior of every axis."""
    fwd = np.roll(data, -1, axis=axis)
    bwd = np.roll(data, 1, axis=axis)
    return (fwd - bwd) / (2 * h)


def _interior(arr: np.ndarray, n: int, margin: int = 1) -> np.ndarray:
    return arr[(slice(margin, -margin),) * n]


def killing_residual(field: SpinorMTuple) -> float:
    """Max over interior nodes of ``|nabla-hat s|`` in the orthonormal frame.

    Derivatives are second-order central differences, so the result is ``O(h^2)``.
    """
    dom = field.domain
    sys = KillingSystem(field.rep, field.signs)
    x1 = dom.x1()
    total = np.zeros(dom.shape)
    for i in range(dom.n):
        d = _central(field.data, i, dom.h)
        r = x1[..., None, None] * (d - sys.rhs(i, np.broadcast_to(x1, dom.shape), field.data))
        total += np.sum(np.abs(r) ** 2, axis=(-2, -1))
    return float(np.sqrt(_interior(total, dom.n).max()))


# ------------------------------------------------------------------ V and type


@dataclass(frozen=True)
class VProfile:
    """``V``, frame gradient and ``c = V^2 - |grad V|^2`` on nodes at least ``margin`` from the boundary."""

    V: np.ndarray
    grad: np.ndarray
    c: np.ndarray
    c_mean: float
    c_std: float
    c_min: float
    margin: int


def _central4(data: np.ndarray, axis: int, h: float) -> np.ndarray:
    r = lambda k: np.roll(data, -k, axis=axis)
    return (-r(2) + 8 * r(1) - 8 * r(-1) + r(-2)) / (12 * h)


def v_profile(field: SpinorMTuple, alpha: int, gradient: str = "central") -> VProfile:
    """``V = |s_alpha|^2``, its frame gradient and ``c = V^2 - |grad V|^2``.

    ``gradient`` selects second-order (``"central"``) or fourth-order (``"central4"``)
    differences of the sampled ``V``, or ``"killing"``, which uses the Killing
    equation ``e_i(V) = lam <B_i s, s>`` and is exact up to transport error.
    """
    dom = field.domain
    s = field.data[..., :, alpha]
    V = np.sum(np.abs(s) ** 2, axis=-1)
    x1 = np.broadcast_to(dom.x1(), dom.shape)
    if gradient == "central":
        grad = np.stack([x1 * _central(V, i, dom.h) for i in range(dom.n)], axis=-1)
        margin = 1
    elif gradient == "central4":
        grad = np.stack([x1 * _central4(V, i, dom.h) for i in range(dom.n)], axis=-1)
        margin = 2
    elif gradient == "killing":
        B = killing_generators(field.rep)
        grad = field.signs[alpha] * np.einsum("...a,iab,...b->...i", s.conj(), B, s).real
        margin = 1
    else:
        raise ValueError("gradient must be 'central', 'central4' or 'killing'")
    Vi = _interior(V, dom.n, margin)
    gi = _interior(grad, dom.n, margin)
    c = Vi**2 - np.sum(gi**2, axis=-1)
    return VProfile(Vi, gi, c, float(c.mean()), float(c.std()), float(c.min()), margin)


@dataclass(frozen=True)
class TypeReport:
    kind: str  # "I", "II" or "indeterminate"
    c: float
    tolerance: float
    nu0: np.ndarray | None
    eigen_residual: float | None


def classify_type(field: SpinorMTuple, alpha: int, killing_res: float | None = None,
                  gradient: str = "central4") -> TypeReport:
    """Classify ``s_alpha`` by the constant ``V^2 - |grad V|^2``.

    The tolerance is ``max(1e-6, 10 * killing residual)``; values within a factor two
    of it are reported as ``"indeterminate"``. For type I the witness
    ``nu0 = lam grad log V`` at the base node is returned together with
    ``max |B(nu0) s - s| / |s|`` over the sampled nodes.
    """
    prof = v_profile(field, alpha, gradient)
    if not np.any(prof.V > 0):
        raise ValueError("degenerate input: V vanishes identically")
    kres = killing_residual(field) if killing_res is None else killing_res
    tol = max(1e-6, 10.0 * kres)
    c = prof.c_mean
    if c <= 0.5 * tol:
        kind = "I"
    elif c >= 2.0 * tol:
        kind = "II"
    else:
        kind = "indeterminate"
    if kind != "I":
        return TypeReport(kind, c, tol, None, None)
    lam = field.signs[alpha]
    nu = lam * prof.grad / prof.V[..., None]
    B = killing_generators(field.rep)
    s = _interior(field.data[..., :, alpha], field.domain.n, prof.margin)
    Bs = np.einsum("...i,iab,...b->...a", nu, B, s)
    eig = float(np.max(np.linalg.norm(Bs - s, axis=-1) / np.linalg.norm(s, axis=-1)))
    base = tuple(i - prof.margin for i in field.base_index)
    if min(base) < 0 or any(b >= k for b, k in zip(base, nu.shape[:-1])):
        raise ValueError("base node too close to the boundary for the witness stencil")
    return TypeReport(kind, c, tol, nu[base].copy(), eig)


# ------------------------------------------------------------------ Gram matrix


def gram_matrix(field: SpinorMTuple) -> np.ndarray:
    """``G[..., a, b] = <s_a, s_b>`` with the inner product linear in its first slot."""
    S = field.data
    return np.einsum("...ia,...ib->...ab", S, S.conj())


@dataclass(frozen=True)
class GramReport:
    max_off_diagonal: float
    max_identity_spread: float
    opposite_pair_gradient: float
    max_gradient: float
    hermitian_residual: float
    min_eigenvalue: float


def gram_identity_check(field: SpinorMTuple) -> GramReport:
    """Off-diagonal size, distance to ``(tr G / m) I`` and constancy of ``G``."""
    dom = field.domain
    G = gram_matrix(field)
    m = field.m
    I = np.eye(m)
    off = G * (1 - I)
    tr = np.trace(G, axis1=-2, axis2=-1).real / m
    spread = np.linalg.norm(G - tr[..., None, None] * I, axis=(-2, -1))
    x1 = np.broadcast_to(dom.x1(), dom.shape)
    grads = np.stack([x1[..., None, None] * _central(G, i, dom.h) for i in range(dom.n)], axis=-1)
    gnorm = _interior(np.sqrt(np.sum(np.abs(grads) ** 2, axis=-1)), dom.n)
    opposite = np.not_equal.outer(field.signs, field.signs)
    herm = np.abs(G - np.swapaxes(G.conj(), -1, -2)).max()
    eigs = np.linalg.eigvalsh(_interior(G, dom.n)).min()
    return GramReport(
        float(np.abs(off).max()), float(spread.max()),
        float(gnorm[..., opposite].max()) if opposite.any() else 0.0,
        float(gnorm.max()), float(herm), float(eigs),
    )


# ------------------------------------------------------------------ boundary condition


def omega_in_basis(rep: CliffordRep, N: np.ndarray, U: np.ndarray) -> np.ndarray:
    """``omega_N`` expressed in the basis given by the columns of ``U``."""
    return U.conj().T @ omega_matrix(rep, N).matrix @ U


def apply_omega(S: np.ndarray, omega: np.ndarray) -> np.ndarray:
    """Action of ``omega`` on the tuple index: ``(omega s)_b = sum_a omega_ba s_a``."""
    return S @ omega.T


def boundary_operator(rep: CliffordRep, nu: np.ndarray, omega: np.ndarray) -> Callable[[np.ndarray], np.ndarray]:
    """Involution ``s -> eps c(nu) omega_N s`` (even) or ``omega_N sqrt(-1) c(nu) s`` (odd)."""
    cn = rep.gamma(np.asarray(nu, float))
    if rep.even:
        left = rep.grading @ cn
        return lambda S: left @ apply_omega(S, omega)
    left = 1j * cn
    return lambda S: apply_omega(left @ S, omega)


def boundary_target_sign(rep: CliffordRep) -> float:
    """Eigenvalue imposed by the local boundary condition: ``-1`` even, ``+1`` odd."""
    return -1.0 if rep.even else 1.0


def boundary_condition_residual(field: SpinorMTuple, nu: np.ndarray, N: np.ndarray,
                                U: np.ndarray, face: str | None = None,
                                points: np.ndarray | None = None) -> float:
    """Max of ``|op(s) - sign s| / |s|`` over the face samples.

    ``nu`` holds the frame components of the ``g``-unit normal (equal to ``N`` for
    conformally flat ``g``); ``U`` is the omega-diagonalizing basis of the tuple index.
    Samples are the nodes of ``face`` (e.g. ``"x2-"``) or explicit grid ``points``.
    """
    rep = field.rep
    nu = np.asarray(nu, float)
    N = np.asarray(N, float)
    if nu.shape != (rep.n,) or N.shape != (rep.n,) or U.shape[0] != rep.m:
        raise ValueError("mismatched dimensions in boundary condition input")
    op = boundary_operator(rep, nu, omega_in_basis(rep, N, U))
    target = boundary_target_sign(rep)
    if face is not None:
        axis = int(face[1:-1]) - 1
        idx = 0 if face[-1] == "-" else field.domain.shape[axis] - 1
        S = np.take(field.data, idx, axis=axis)
    elif points is not None:
        S = np.stack([field.data[field.domain.index_of(p)] for p in np.atleast_2d(points)])
    else:
        raise ValueError("give a face tag or sample points")
    S = S.reshape((-1,) + S.shape[-2:])
    res = op(S) - target * S
    return float(np.max(np.linalg.norm(res, axis=(-2, -1)) / np.linalg.norm(S, axis=(-2, -1))))


def project_boundary_condition(rep: CliffordRep, nu: np.ndarray, omega: np.ndarray, S: np.ndarray) -> np.ndarray:
    """Project ``S`` onto the solution space of the boundary condition."""
    op = boundary_operator(rep, nu, omega)
    return 0.5 * (S + boundary_target_sign(rep) * op(S))


# ------------------------------------------------------------------ Hessian identity


@dataclass(frozen=True)
class HessianReport:
    interior: float
    boundary_plus: float
    boundary_minus: float
    matching_sign: str
    f_scale: float


def pairing(c: np.ndarray, S: np.ndarray) -> np.ndarray:
    """Formal inner product ``<c, s> = sum_a conj(c_a) s_a`` (a spinor per node)."""
    return np.einsum("a,...ia->...i", np.conj(c), S)


def hessian_identity_residual(field: SpinorMTuple, c1: np.ndarray, c2: np.ndarray,
                              N: np.ndarray | None = None, face: str = "x2-",
                              N0: np.ndarray | None = None) -> HessianReport:
    """Check ``Hess f = f b`` for ``f = <c1, s> . <c2, s>`` and its normal derivative.

    ``f`` is spinor valued through the pairing ``<c, s>`` and then contracted by the
    Hermitian product of spinors. The covariant Hessian of ``b`` in the frame is
    ``(x^1)^2 (d_i d_j f + (delta_1j d_i f + delta_1i d_j f - delta_ij d_1 f) / x^1)``.
    The boundary derivative
    ``nu(f)`` on ``face`` is compared with ``+<N0, N> f`` and ``-<N0, N> f``.
    """
    dom = field.domain
    n, h = dom.n, dom.h
    p1 = pairing(np.asarray(c1, complex), field.data)
    p2 = pairing(np.asarray(c2, complex), field.data)
    f = np.einsum("...i,...i->...", p1, p2.conj())
    x = np.broadcast_to(dom.x1(), dom.shape)
    df = [_central(f, i, h) for i in range(n)]
    worst = 0.0
    for i in range(n):
        for j in range(n):
            if i == j:
                d2 = (np.roll(f, -1, i) - 2 * f + np.roll(f, 1, i)) / h**2
            else:
                d2 = _central(_central(f, i, h), j, h)
            # Gam^k_ij d_k f = -(delta_j1 d_i f + delta_i1 d_j f - delta_ij d_1 f) / x^1
            corr = np.zeros_like(f)
            if i == 0:
                corr = corr + df[j] / x
            if j == 0:
                corr = corr + df[i] / x
            if i == j:
                corr = corr - df[0] / x
            hess = x**2 * (d2 + corr)
            target = f if i == j else 0.0
            worst = max(worst, float(np.abs(_interior(hess - target, n)).max()))
    scale = float(np.abs(_interior(f, n)).max())
    N = np.eye(n)[1] if N is None else np.asarray(N, float)
    N0 = np.eye(n)[0] if N0 is None else np.asarray(N0, float)
    axis = int(face[1:-1]) - 1
    outward = -1.0 if face[-1] == "-" else 1.0
    idx = 1 if face[-1] == "-" else dom.shape[axis] - 2
    # one node inside the face so a central difference is available
    dnu = outward * np.take(x * _central(f, axis, h), idx, axis=axis)
    fb = np.take(f, idx, axis=axis)
    inner = tuple(slice(1, -1) for _ in range(n - 1))
    dnu, fb = dnu[inner], fb[inner]
    k = float(N0 @ N)
    plus = float(np.abs(dnu - k * fb).max())
    minus = float(np.abs(dnu + k * fb).max())
    sign = "+" if plus < minus else "-" if minus < plus else "both"
    return HessianReport(worst, plus, minus, sign, scale)


# ------------------------------------------------------------------ curvature reconstruction


def conformal_frame_riemann(grad_u: np.ndarray, hess_u: np.ndarray, u: float) -> np.ndarray:
    """Frame curvature ``R_ijkl`` of ``e^{2u} delta`` from the jets of ``u``.

    ``R = -e^{-2u} (A (kn) delta)`` with ``A = Hess u - du du + |du|^2 delta / 2`` and
    ``(kn)`` the Kulkarni-Nomizu product.
    """
    n = grad_u.size
    I = np.eye(n)
    A = hess_u - np.outer(grad_u, grad_u) + 0.5 * (grad_u @ grad_u) * I
    kn = (np.einsum("ik,jl->ijkl", A, I) + np.einsum("jl,ik->ijkl", A, I)
          - np.einsum("il,jk->ijkl", A, I) - np.einsum("jk,il->ijkl", A, I))
    return -math.exp(-2 * u) * kn


def log_factor_jets(log_factor: Callable[[np.ndarray], float], x: np.ndarray,
                    step: float = 2e-4) -> tuple[float, np.ndarray, np.ndarray]:
    """Value, gradient and Hessian of ``u`` by central differences."""
    n = x.size
    E = np.eye(n) * step
    u0 = log_factor(x)
    g = np.array([(log_factor(x + E[i]) - log_factor(x - E[i])) / (2 * step) for i in range(n)])
    H = np.empty((n, n))
    for i in range(n):
        H[i, i] = (log_factor(x + E[i]) - 2 * u0 + log_factor(x - E[i])) / step**2
        for j in range(i + 1, n):
            H[i, j] = H[j, i] = (log_factor(x + E[i] + E[j]) - log_factor(x + E[i] - E[j])
                                 - log_factor(x - E[i] + E[j]) + log_factor(x - E[i] - E[j])) / (4 * step**2)
    return u0, g, H


def hyperbolic_log_factor(x: np.ndarray) -> float:
    return -math.log(x[0])


def perturbed_log_factor(eps: float = 0.01) -> Callable[[np.ndarray], float]:
    """``log`` of ``(x^1)^-1 (1 + eps sin x^2)``."""
    return lambda x: -math.log(x[0]) + math.log1p(eps * math.sin(x[1]))


def faithful_odd_rep(rep: CliffordRep) -> tuple[np.ndarray, np.ndarray]:
    """Faithful representation of the odd Clifford algebra as ``rho_+ (+) rho_-``.

    Returns the ``(n, 2m, 2m)`` generators and the volume form ``Gamma``.
    """
    if rep.even:
        raise ValueError("faithful_odd_rep needs odd n")
    m = rep.m
    gens = np.zeros((rep.n, 2 * m, 2 * m), dtype=complex)
    gens[:, :m, :m] = rep.generators
    gens[:, m:, m:] = -rep.generators
    prod = np.eye(2 * m, dtype=complex)
    for g in gens:
        prod = prod @ g
    vol = (1j) ** ((rep.n + 1) // 2) * prod
    return gens, vol


def curvature_reconstruction_residual(field: SpinorMTuple, log_factor: Callable[[np.ndarray], float],
                                      stride: int = 4, step: float = 2e-4) -> float:
    """Max over ``k, l, mu`` and sampled nodes of
    ``|sum_ij (R_ijkl + d_ik d_jl - d_il d_jk) c(e_i) c(e_j) s_mu|``.

    For odd ``n`` the Clifford element is evaluated in the faithful representation and
    multiplied by ``(1 + Gamma)`` before acting on the spinor lifted to the ``+1``
    eigenspace of ``Gamma``.
    """
    rep = field.rep
    dom = field.domain
    n = rep.n
    I = np.eye(n)
    const = np.einsum("ik,jl->ijkl", I, I) - np.einsum("il,jk->ijkl", I, I)
    if rep.even:
        gens = rep.generators
        proj = np.eye(rep.m)
        lift = np.eye(rep.m)
    else:
        gens, vol = faithful_odd_rep(rep)
        proj = np.eye(2 * rep.m) + vol
        # the block of rho_+ (+) rho_- on which Gamma = +1
        block = 0 if vol[0, 0].real > 0 else 1
        lift = np.zeros((2 * rep.m, rep.m), dtype=complex)
        lift[block * rep.m:(block + 1) * rep.m] = np.eye(rep.m)
    gg = np.einsum("iab,jbc->ijac", gens, gens)
    worst = 0.0
    grid = np.stack(np.meshgrid(*dom.axes, indexing="ij"), axis=-1)
    sel = tuple(slice(0, None, stride) for _ in range(n))
    pts = grid[sel].reshape(-1, n)
    Ss = field.data[sel].reshape((-1,) + field.data.shape[-2:])
    for x, S in zip(pts, Ss):
        u, du, H = log_factor_jets(log_factor, x, step)
        T = conformal_frame_riemann(du, H, u) + const
        X = np.einsum("ijkl,ijac->klac", T, gg)
        vec = lift @ S
        out = np.einsum("ab,klbc,cm->klam", proj, X, vec)
        worst = max(worst, float(np.linalg.norm(out, axis=2).max()))
    return worst
