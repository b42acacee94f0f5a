"""Twisted Dirac operators on m-tuples and the identities they satisfy.

A twisted spinor ``sigma = sum_ab Sigma_ab e_a (x) e_b`` is stored as the ``m x m``
matrix ``Sigma``; a product operator ``A (x) B`` acts as ``A @ Sigma @ B.T`` and the
pointwise inner product is the Frobenius product. The first factor carries the
domain Clifford action ``c``, the second the target action ``cbar`` written in the
basis that diagonalizes ``omega`` of the distinguished direction ``d_s = e_1``.

Two parities are supported. In ``even-grading`` mode the twisting uses the grading
``eps (x) epsbar``; in ``odd-volume`` mode it uses ``sqrt(-1) c (x) sqrt(-1) cbar``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import trapezoid

from .clifford import CliffordRep, NormalizationError, UNIT_TOL, diagonalize_omega
from .polytope_smoothing import random_orthogonal
from .spinor_fields import GridDomain, SpinorMTuple, build_killing_basis, omega_in_basis
from .warped_geometry import hyperbolic_factor

MODES = ("even-grading", "odd-volume")
BACKGROUNDS = ("flat", "hyperbolic")


class ParityError(ValueError):
    """Raised when the representation parity does not match the requested mode."""


class InputError(ValueError):
    """Raised when a test section cannot be sampled on the grid."""


class PreconditionError(ValueError):
    """Raised when stretch factors violate the distance non-increasing condition."""


def mode_for(rep: CliffordRep) -> str:
    return MODES[0] if rep.even else MODES[1]


def _apply(A: np.ndarray, B: np.ndarray, S: np.ndarray) -> np.ndarray:
    """``(A (x) B) sigma`` in matrix form; broadcasts over leading axes."""
    return A @ S @ np.swapaxes(B, -1, -2)


def _inner(S: np.ndarray, T: np.ndarray) -> np.ndarray:
    return np.sum(S.conj() * T, axis=(-2, -1))


def _sq(S: np.ndarray) -> np.ndarray:
    return np.sum(np.abs(S) ** 2, axis=(-2, -1))


def _twist_from_factor(psi: Callable[[np.ndarray], float], step: float = 1e-5) -> Callable[[np.ndarray], np.ndarray]:
    def kappa(x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, float)
        e = np.zeros(x.shape[-1])
        e[0] = step
        p = np.apply_along_axis(psi, -1, x)
        dp = (np.apply_along_axis(psi, -1, x + e) - np.apply_along_axis(psi, -1, x - e)) / (2 * step)
        return dp / p**2
    return kappa


def _hyperbolic_twist(x: np.ndarray) -> np.ndarray:
    # psi = 1/x^1 gives psi'/psi^2 = -1 identically
    return -np.ones(np.shape(x)[:-1])


def _flat_twist(x: np.ndarray) -> np.ndarray:
    return np.zeros(np.shape(x)[:-1])


@dataclass(frozen=True)
class OperatorAssembly:
    """Pointwise operators on m-tuple fields over ``domain``.

    Attributes
    ----------
    rep : CliffordRep
        Domain-side representation; the frame is orthonormal so ``c(e_i) = gamma_i``.
    domain : GridDomain
        Box on which fields are sampled.
    mode : str
        ``"even-grading"`` or ``"odd-volume"``.
    background : str
        ``"flat"`` (``g = delta``, constant conformal factor) or ``"hyperbolic"``
        (``g = (x^1)^-2 delta``, ``psi = 1/x^1``).
    twist : callable
        ``kappa(x) = psi'/psi^2`` at points of shape ``(..., n)``.
    U : np.ndarray
        Unitary adapting the target spinor basis to ``d_s = e_1``.
    """

    rep: CliffordRep
    domain: GridDomain
    mode: str
    background: str
    twist: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    U: np.ndarray = field(repr=False)
    target: CliffordRep = field(init=False, repr=False)
    omega_s: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "target", self.rep.conjugate(self.U))
        e1 = np.eye(self.rep.n)[0]
        object.__setattr__(self, "omega_s", omega_in_basis(self.rep, e1, self.U))

    @property
    def n(self) -> int:
        return self.rep.n

    @property
    def m(self) -> int:
        return self.rep.m

    @property
    def even(self) -> bool:
        return self.mode == MODES[0]

    def left(self, X: np.ndarray) -> np.ndarray:
        """Domain factor of the boundary involution: ``eps c(X)`` or ``sqrt(-1) c(X)``."""
        cx = self.rep.gamma(np.asarray(X, float))
        return self.rep.grading @ cx if self.even else 1j * cx

    def right(self, X: np.ndarray) -> np.ndarray:
        """Target factor ``epsbar cbar(X)`` or ``sqrt(-1) cbar(X)`` in the adapted basis."""
        cx = self.target.gamma(np.asarray(X, float))
        return self.target.grading @ cx if self.even else 1j * cx

    def chi(self, e_n: np.ndarray, N: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Factors ``(A, B)`` with ``chi = A (x) B`` for inner normal ``e_n`` and target direction ``N``."""
        return self.left(e_n), self.right(N)

    def chi_matrix(self, e_n: np.ndarray, N: np.ndarray) -> np.ndarray:
        A, B = self.chi(e_n, N)
        return np.kron(A, B)

    def psi_factors(self, kappa: float) -> tuple[np.ndarray, np.ndarray]:
        """``Psi = A (x) B``: ``(n/2) kappa eps (x) omega_s`` or ``(n/2) kappa sqrt(-1) (x) omega_s``."""
        base = self.rep.grading if self.even else 1j * self.rep.identity
        return 0.5 * self.n * kappa * base, self.omega_s

    def connection_factors(self, kappa: float, i: int) -> tuple[np.ndarray, np.ndarray]:
        """Zeroth-order part of the modified connection along ``e_i``."""
        g = self.rep.generators[i]
        if self.even:
            return 0.5 * kappa * (self.rep.grading @ g), self.omega_s
        return -0.5j * kappa * g, self.omega_s

    def psi(self, S: np.ndarray, kappa: np.ndarray | float) -> np.ndarray:
        A, B = self.psi_factors(1.0)
        return np.asarray(kappa)[..., None, None] * _apply(A, B, S)

    def modified_connection(self, grads: np.ndarray, S: np.ndarray, kappa: np.ndarray | float) -> np.ndarray:
        """``nabla-hat_{e_i} sigma`` from frame derivatives ``grads[i] = nabla_{e_i} sigma``."""
        k = np.asarray(kappa)[..., None, None]
        out = np.empty_like(grads)
        for i in range(self.n):
            A, B = self.connection_factors(1.0, i)
            out[i] = grads[i] + k * _apply(A, B, S)
        return out

    def dirac(self, grads: np.ndarray) -> np.ndarray:
        """``sum_i c(e_i) grads[i]``."""
        return np.einsum("iab,i...bc->...ac", self.rep.generators, grads)

    def boundary_dirac(self, e_n: np.ndarray, tangents: np.ndarray, grads_t: np.ndarray) -> np.ndarray:
        """``D^partial`` on a flat face: ``sum_j c(e_n) c(e_j) nabla_{e_j}``.

        ``tangents`` has shape ``(n-1, n)`` and ``grads_t[j]`` is the derivative along ``tangents[j]``.
        """
        cn = self.rep.gamma(e_n)
        ops = np.einsum("ab,jbc->jac", cn, self.rep.gamma(tangents))
        return np.einsum("jab,j...bc->...ac", ops, grads_t)


def assemble_operators(rep: CliffordRep, domain: GridDomain, mode: str | None = None,
                       background: str = "flat",
                       psi: Callable[[np.ndarray], float] | None = None) -> OperatorAssembly:
    """Build the operator assembly.

    Parameters
    ----------
    rep : CliffordRep
        Representation whose parity must match ``mode``.
    domain : GridDomain
        Sampling box.
    mode : str, optional
        Defaults to the parity of ``rep``.
    background : str
        ``"flat"`` or ``"hyperbolic"``.
    psi : callable, optional
        Conformal factor as a function of the point; overrides the background default
        (constant for flat, ``1/x^1`` for hyperbolic).

    Raises
    ------
    ParityError
        If ``mode`` does not match the parity of ``rep``.
    """
    mode = mode_for(rep) if mode is None else mode
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}; expected one of {MODES}")
    if mode != mode_for(rep):
        raise ParityError(f"mode {mode!r} needs n {'even' if mode == MODES[0] else 'odd'}, got n = {rep.n}")
    if background not in BACKGROUNDS:
        raise ValueError(f"unknown background {background!r}; expected one of {BACKGROUNDS}")
    if rep.n != domain.n:
        raise ValueError("representation and domain dimensions differ")
    if psi is not None:
        twist = _twist_from_factor(psi)
    elif background == "hyperbolic":
        twist = _hyperbolic_twist
    else:
        twist = _flat_twist
    U = diagonalize_omega(rep, np.eye(rep.n)[0])
    return OperatorAssembly(rep, domain, mode, background, twist, U)


def hyperbolic_psi(x: np.ndarray) -> float:
    """Conformal factor of the half-space model."""
    return hyperbolic_factor(x)


# ------------------------------------------------------------------ algebra


def _random_unit(rng: np.random.Generator, count: int, n: int) -> np.ndarray:
    v = rng.standard_normal((count, n))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def _project_out(v: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Remove from each ``v[k, ..., :]`` its component along the unit vector ``u[k]``."""
    uu = u.reshape(u.shape[:1] + (1,) * (v.ndim - 2) + u.shape[1:])
    return v - np.sum(v * uu, axis=-1, keepdims=True) * uu


def _gamma_batch(rep: CliffordRep, X: np.ndarray) -> np.ndarray:
    return np.einsum("...i,iab->...ab", X, rep.generators)


def chi_involution_residuals(assembly: OperatorAssembly, trials: int = 1000,
                             rng: np.random.Generator | None = None) -> dict[str, float]:
    """Max of ``|chi^2 - I|`` and ``|chi^* - chi|`` over random ``(e_n, N)`` pairs."""
    rng = np.random.default_rng(0) if rng is None else rng
    n = assembly.n
    E = _random_unit(rng, trials, n)
    N = _random_unit(rng, trials, n)
    I = np.eye(assembly.m**2)
    inv = herm = 0.0
    for e, v in zip(E, N):
        X = assembly.chi_matrix(e, v)
        inv = max(inv, np.linalg.norm(X @ X - I, 2))
        herm = max(herm, np.linalg.norm(X - X.conj().T, 2))
    return {"chi_involution": float(inv), "chi_self_adjoint": float(herm)}


def boundary_anticommutation_check(assembly: OperatorAssembly, trials: int = 10_000,
                                   rng: np.random.Generator | None = None, chunk: int = 2000) -> float:
    """Max residual of ``D^partial chi + chi D^partial`` over random boundary frames.

    Each trial draws an orthonormal frame ``(e_1, .., e_n)`` with ``e_n`` the inner
    normal, a symmetric shape operator giving ``nabla_{e_j} e_n``, a unit target
    direction ``N`` with a random tangent derivative ``dN(e_j)``, and the first jet
    ``(sigma, d_j sigma)`` of a linear test section. Both the principal symbol
    ``c(e_n) c(tau)`` and the full first-order operator including the boundary
    connection terms ``1/2 c(nabla e_n) c(e_n)`` and ``1/2 cbar(dN) cbar(N)`` are
    tested. Residuals are relative to the size of the jet.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    n, m = assembly.n, assembly.m
    rep, tgt = assembly.rep, assembly.target
    worst = 0.0
    done = 0
    while done < trials:
        k = min(chunk, trials - done)
        done += k
        O = random_orthogonal(n, k, rng)
        en = O[:, :, n - 1]
        tang = np.swapaxes(O[:, :, : n - 1], 1, 2)  # (k, n-1, n)
        Ash = rng.standard_normal((k, n - 1, n - 1))
        Ash = 0.5 * (Ash + np.swapaxes(Ash, 1, 2))
        dEn = np.einsum("kjl,kli->kji", Ash, tang)  # nabla_{e_j} e_n, tangent
        N = _random_unit(rng, k, n)
        dN = _project_out(rng.standard_normal((k, n - 1, n)), N)
        S = rng.standard_normal((k, m, m)) + 1j * rng.standard_normal((k, m, m))
        dS = rng.standard_normal((k, n - 1, m, m)) + 1j * rng.standard_normal((k, n - 1, m, m))

        cn = _gamma_batch(rep, en)
        ct = _gamma_batch(rep, tang)
        L = _gamma_batch(rep, en)
        Lj = _gamma_batch(rep, dEn)
        R = _gamma_batch(tgt, N)
        Rj = _gamma_batch(tgt, dN)
        if assembly.even:
            lhs_dom, lhs_tgt = rep.grading, tgt.grading
        else:
            lhs_dom = lhs_tgt = 1j * np.eye(m)
        chiA, chiB = lhs_dom @ L, lhs_tgt @ R
        dchiA, dchiB = lhs_dom @ Lj, lhs_tgt @ Rj
        C = cn[:, None] @ ct  # c(e_n) c(e_j)
        conn_dom = 0.5 * Lj @ cn[:, None]
        conn_tgt = 0.5 * Rj @ R[:, None]

        def chi(T: np.ndarray) -> np.ndarray:
            return _apply(chiA, chiB, T)

        def db(T: np.ndarray, dT: np.ndarray) -> np.ndarray:
            out = np.zeros_like(T)
            for j in range(n - 1):
                cov = dT[:, j] + conn_dom[:, j] @ T + T @ np.swapaxes(conn_tgt[:, j], -1, -2)
                out += C[:, j] @ cov
            return out

        # derivative of chi sigma along e_j
        chi_S = chi(S)
        d_chi_S = np.stack([
            _apply(dchiA[:, j], chiB, S) + _apply(chiA, dchiB[:, j], S) + chi(dS[:, j])
            for j in range(n - 1)], axis=1)
        res = db(chi_S, d_chi_S) + chi(db(S, dS))
        scale = np.sqrt(_sq(S) + _sq(dS).sum(axis=1))
        full = np.sqrt(_sq(res)) / scale
        # tangent directions from the frame itself, so orthogonality to e_n is exact
        tau = np.einsum("kj,kji->ki", _random_unit(rng, k, n - 1), tang)
        sym = cn @ _gamma_batch(rep, tau)
        # {sym (x) 1, chiA (x) chiB} = {sym, chiA} (x) chiB and |chiB| = 1
        anti = np.linalg.norm(sym @ chiA + chiA @ sym, ord=2, axis=(1, 2))
        worst = max(worst, float(full.max()), float(anti.max()))
    return worst


# ------------------------------------------------------------------ integrated identity


@dataclass(frozen=True)
class ManufacturedField:
    """``sigma(x) = sum_k C_k x^alpha_k exp(-|x - center|^2 / (2 width^2))``."""

    exponents: np.ndarray  # (K, n) integer powers
    coefficients: np.ndarray = field(repr=False)  # (K, m, m) complex
    center: np.ndarray
    width: float

    def __call__(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, float)
        mono = np.prod(x[..., None, :] ** self.exponents, axis=-1)  # (..., K)
        env = np.exp(-np.sum((x - self.center) ** 2, axis=-1) / (2 * self.width**2))
        return np.einsum("...k,kab->...ab", mono, self.coefficients) * env[..., None, None]


def manufactured_field(n: int, m: int, rng: np.random.Generator, degree: int = 3,
                       domain: GridDomain | None = None, width: float = 0.35) -> ManufacturedField:
    """Random polynomial of total degree ``<= degree`` with complex matrix coefficients,
    times a Gaussian envelope centred inside ``domain``."""
    exps = [e for e in np.ndindex(*(degree + 1,) * n) if sum(e) <= degree]
    coef = rng.standard_normal((len(exps), m, m)) + 1j * rng.standard_normal((len(exps), m, m))
    coef /= np.sqrt(len(exps))
    if domain is None:
        center = np.full(n, 0.5)
    else:
        lo, hi = np.array(domain.lo), np.array(domain.hi)
        center = lo + (hi - lo) * rng.uniform(0.3, 0.7, n)
    return ManufacturedField(np.array(exps), coef, center, width)


@dataclass(frozen=True)
class SLReport:
    """Terms of the integrated identity on one grid.

    ``terms`` is keyed by identity line: ``dirac`` (left side), ``connection``,
    ``curvature``, ``twist_gradient``, ``twist_square``, ``boundary_dirac``,
    ``boundary_shape`` and ``boundary_twist``. ``residual`` is the left side minus the
    sum of the right side, with sign.
    """

    h: float
    terms: dict[str, float]
    residual: float
    background: str
    mode: str

    def to_json(self) -> dict:
        return {"h": self.h, "mode": self.mode, "background": self.background,
                "terms": dict(self.terms), "residual": self.residual}


_RHS = ("connection", "curvature", "twist_gradient", "twist_square",
        "boundary_dirac", "boundary_shape", "boundary_twist")


def _sample(sigma: Callable[[np.ndarray], np.ndarray], pts: np.ndarray, m: int) -> np.ndarray:
    try:
        out = np.asarray(sigma(pts))
    except Exception as exc:  # noqa: BLE001 - re-raised with context
        raise InputError(f"test section could not be evaluated on the grid: {exc}") from exc
    if out.shape != pts.shape[:-1] + (m, m):
        raise InputError(f"test section returned shape {out.shape}, expected {pts.shape[:-1] + (m, m)}")
    if not np.all(np.isfinite(out)):
        raise InputError("test section is not finite on the grid")
    return out.astype(complex)


def _flat_report(assembly: OperatorAssembly, sigma: Callable, h: float) -> SLReport:
    dom = assembly.domain
    n, m = assembly.n, assembly.m
    lo, hi = np.array(dom.lo, float), np.array(dom.hi, float)
    counts = np.rint((hi - lo) / h).astype(int)
    if np.any(np.abs(counts * h - (hi - lo)) > 1e-9):
        raise InputError("grid step must divide every box side")
    eye = np.eye(n)

    # interior: midpoint rule on cell centres, central differences of step h
    centres = np.stack(np.meshgrid(*[lo[i] + h * (np.arange(counts[i]) + 0.5) for i in range(n)],
                                   indexing="ij"), axis=-1)
    S = _sample(sigma, centres, m)
    grads = np.stack([(_sample(sigma, centres + h * eye[i], m) - _sample(sigma, centres - h * eye[i], m)) / (2 * h)
                      for i in range(n)])
    kappa = assembly.twist(centres)
    hat = assembly.modified_connection(grads, S, kappa)
    Dhat = assembly.dirac(hat)
    cell = h**n
    terms = dict.fromkeys(("dirac",) + _RHS, 0.0)
    terms["dirac"] = float(_sq(Dhat).sum() * cell)
    terms["connection"] = float(_sq(hat).sum() * cell)
    # flat domain and flat target: the curvature endomorphism vanishes
    if np.any(kappa != 0):
        raise ValueError("flat background needs a constant conformal factor")

    # faces: trapezoid rule on face nodes, tangential central differences
    for k in range(n):
        for side, value in ((-1, lo[k]), (+1, hi[k])):
            tang_axes = [i for i in range(n) if i != k]
            grids = [lo[i] + h * np.arange(counts[i] + 1) for i in tang_axes]
            mesh = np.meshgrid(*grids, indexing="ij")
            pts = np.zeros(mesh[0].shape + (n,)) if mesh else np.zeros((n,))
            for a, i in enumerate(tang_axes):
                pts[..., i] = mesh[a]
            pts[..., k] = value
            Sf = _sample(sigma, pts, m)
            dT = np.stack([(_sample(sigma, pts + h * eye[i], m) - _sample(sigma, pts - h * eye[i], m)) / (2 * h)
                           for i in tang_axes])
            e_n = -side * eye[k]  # inner normal
            chiA, chiB = assembly.chi(e_n, e_n)
            plus = Sf + _apply(chiA, chiB, Sf)
            minus = Sf - _apply(chiA, chiB, Sf)
            dplus = dT + _apply(chiA, chiB, dT)
            dminus = dT - _apply(chiA, chiB, dT)
            tangents = eye[tang_axes]
            integrand = 0.25 * (_inner(assembly.boundary_dirac(e_n, tangents, dplus), minus)
                                + _inner(assembly.boundary_dirac(e_n, tangents, dminus), plus))
            w = integrand.real
            for a in range(n - 1):
                w = trapezoid(w, dx=h, axis=0)
            terms["boundary_dirac"] += float(w)
    residual = terms["dirac"] - sum(terms[k] for k in _RHS)
    return SLReport(h, terms, float(residual), assembly.background, assembly.mode)


def _trap_weights(count: int, h: float) -> np.ndarray:
    w = np.full(count, h)
    w[[0, -1]] = 0.5 * h
    return w


def _hyperbolic_report(assembly: OperatorAssembly, field_: SpinorMTuple) -> SLReport:
    """Terms for a sampled field on a half-space box, ``psi = 1/x^1``.

    Frame derivatives are ``nabla_{e_i} sigma = x^1 d_i sigma + Ahat_i sigma``; the
    boundary line is evaluated in the equivalent form
    ``<(c(e_n) D + nabla_{e_n}) sigma, sigma> + (n-1)/n <c(e_n) Psi sigma, sigma>``,
    which folds the ``D^partial`` pairings and the shape term together.
    """
    dom = field_.domain
    n, h = assembly.n, dom.h
    S = field_.data
    x1 = dom.x1()
    g = assembly.rep.generators
    Ahat = 0.25 * (np.einsum("iab,bc->iac", g, g[0]) - np.einsum("ab,ibc->iac", g[0], g))
    grads = np.stack([x1[..., None, None] * np.gradient(S, h, axis=i, edge_order=2) + Ahat[i] @ S
                      for i in range(n)])
    pts = np.stack(np.meshgrid(*dom.axes, indexing="ij"), axis=-1)
    kappa = assembly.twist(pts)
    hat = assembly.modified_connection(grads, S, kappa)
    Dhat = assembly.dirac(hat)
    vol = np.broadcast_to(x1 ** (-float(n)), dom.shape)
    weights = vol.copy()
    for i, ax in enumerate(dom.axes):
        shape = [1] * n
        shape[i] = -1
        weights = weights * _trap_weights(len(ax), h).reshape(shape)
    R_g = -n * (n - 1)
    terms = dict.fromkeys(("dirac",) + _RHS, 0.0)
    terms["dirac"] = float(np.sum(weights * _sq(Dhat)))
    terms["connection"] = float(np.sum(weights * _sq(hat).sum(axis=0)))
    terms["curvature"] = float(np.sum(weights * R_g / 4 * _sq(S)))
    terms["twist_square"] = float(np.sum(weights * n * (n - 1) / 4 * kappa**2 * _sq(S)))
    # kappa is constant, so the gradient line vanishes
    D = assembly.dirac(grads)
    PsiS = assembly.psi(S, kappa)
    eye = np.eye(n)
    for k in range(n):
        for side in (-1, +1):
            idx = [slice(None)] * n
            idx[k] = 0 if side < 0 else -1
            idx = tuple(idx)
            e_n = -side * eye[k]
            cn = assembly.rep.gamma(e_n)
            Sf = S[idx]
            dn = np.tensordot(e_n, grads[(slice(None),) + idx], axes=(0, 0))
            line = _inner(cn @ D[idx] + dn, Sf).real
            twist = (n - 1) / n * _inner(cn @ PsiS[idx], Sf).real
            x1f = np.broadcast_to(x1, dom.shape)[idx]
            area = x1f ** (-(n - 1.0))
            wf = area
            for a, i in enumerate([i for i in range(n) if i != k]):
                shape = [1] * (n - 1)
                shape[a] = -1
                wf = wf * _trap_weights(dom.shape[i], h).reshape(shape)
            terms["boundary_dirac"] += float(np.sum(wf * line))
            terms["boundary_twist"] += float(np.sum(wf * twist))
    residual = terms["dirac"] - sum(terms[k] for k in _RHS)
    return SLReport(h, terms, float(residual), assembly.background, assembly.mode)


def sl_identity_residual(assembly: OperatorAssembly, sigma: Callable[[np.ndarray], np.ndarray] | None,
                         h_list: list[float]) -> list[SLReport]:
    """Evaluate every term of the integrated identity on grids of step ``h``.

    Flat background: ``sigma`` is a callable section (e.g. ``ManufacturedField``)
    sampled at cell centres (midpoint rule) and on face nodes (trapezoid rule), with
    central differences of step ``h``. The boundary line uses the literal pairing
    ``1/4 <D^partial (sigma +- chi sigma), sigma -+ chi sigma>`` with ``chi`` built
    from the inner normal.

    Hyperbolic background: ``sigma`` must be ``None``; on each grid a Killing basis is
    built from the adapted data at the lower corner and used as the test section.
    """
    out = []
    dom = assembly.domain
    for h in h_list:
        if assembly.background == "flat":
            if sigma is None:
                raise InputError("flat background needs a test section")
            out.append(_flat_report(assembly, sigma, float(h)))
        else:
            if sigma is not None:
                raise InputError("hyperbolic background uses the Killing basis as test section")
            grid = GridDomain(dom.n, dom.lo, dom.hi, float(h))
            data = build_killing_basis(assembly.rep, grid, np.array(grid.lo))
            out.append(_hyperbolic_report(assembly, data))
    return out


def convergence_orders(reports: list[SLReport]) -> list[float]:
    """``log2(|r(h)| / |r(h/2)|)`` between consecutive reports."""
    orders = []
    for a, b in zip(reports, reports[1:]):
        orders.append(float(np.log(abs(a.residual) / abs(b.residual)) / np.log(a.h / b.h)))
    return orders


# ------------------------------------------------------------------ curvature bounds


@dataclass(frozen=True)
class EndomorphismBound:
    """Minimum eigenvalue of a curvature endomorphism against its lower bound."""

    min_eigenvalue: float
    bound: float
    margin: float
    holds: bool


def _check_stretch(mu: np.ndarray, psi: float) -> None:
    if psi <= 0:
        raise PreconditionError("conformal factor must be positive")
    if np.any(mu < 0):
        raise PreconditionError("stretch factors must be non-negative")
    if np.any(mu * psi > 1 + UNIT_TOL):
        raise PreconditionError("stretch factors violate mu_i psi <= 1 (map not distance non-increasing)")


def curvature_endomorphism_bound(rep: CliffordRep, fiber: str, psi: float, mu: np.ndarray,
                                 leaf_curvature: float = 1.0, tol: float = 1e-10) -> EndomorphismBound:
    """Curvature part of the twisted Weitzenbock endomorphism for a product target.

    The target is ``ds^2 + h`` with ``h`` a round sphere of sectional curvature
    ``leaf_curvature`` (``fiber="sphere"``) or flat (``fiber="flat"``). With
    ``f_* e_i = mu_i ebar_i`` on the ``n - 1`` leaf directions the endomorphism is
    ``-1/2 sum_{a<b} K mu_a mu_b c(e_a e_b) (x) cbar(ebar_a ebar_b)``; its minimum
    eigenvalue is compared with ``-R_h / (4 psi^2)``.
    """
    n = rep.n
    mu = np.asarray(mu, float)
    if mu.shape != (n - 1,):
        raise ValueError(f"need {n - 1} leaf stretch factors, got shape {mu.shape}")
    _check_stretch(mu, psi)
    if fiber == "sphere":
        K = float(leaf_curvature)
    elif fiber == "flat":
        K = 0.0
    else:
        raise ValueError(f"unknown fiber {fiber!r}")
    g = rep.generators
    E = np.zeros((rep.m**2, rep.m**2), dtype=complex)
    for a in range(n - 1):
        for b in range(a + 1, n - 1):
            w = g[a] @ g[b]
            E -= 0.5 * K * mu[a] * mu[b] * np.kron(w, w)
    lo = float(np.linalg.eigvalsh(E).min())
    R_h = K * (n - 1) * (n - 2)
    bound = -R_h / (4 * psi**2)
    return EndomorphismBound(lo, bound, lo - bound, lo >= bound - tol)


def shape_endomorphism_bound(rep: CliffordRep, shape_operator: np.ndarray, psi: float, mu: np.ndarray,
                             tol: float = 1e-10) -> EndomorphismBound:
    """Boundary analogue: ``-1/2 sum_i c(e_n) c(e_i) (x) cbar(mu_i A ebar_i) cbar(ebar_n)``
    against ``-tr(A) / (2 psi)`` for a positive semi-definite second fundamental form ``A``."""
    n = rep.n
    A = np.asarray(shape_operator, float)
    mu = np.asarray(mu, float)
    if A.shape != (n - 1, n - 1) or not np.allclose(A, A.T):
        raise ValueError("shape operator must be symmetric of size n-1")
    if np.linalg.eigvalsh(A).min() < -tol:
        raise PreconditionError("shape operator must be positive semi-definite")
    _check_stretch(mu, psi)
    g = rep.generators
    E = np.zeros((rep.m**2, rep.m**2), dtype=complex)
    for i in range(n - 1):
        cb = np.tensordot(mu[i] * A[i], g[: n - 1], axes=1) @ g[n - 1]
        E -= 0.5 * np.kron(g[n - 1] @ g[i], cb)
    lo = float(np.linalg.eigvalsh(E).min())
    bound = -float(np.trace(A)) / (2 * psi)
    return EndomorphismBound(lo, bound, lo - bound, lo >= bound - tol)


# ------------------------------------------------------------------ chi_lambda


@dataclass(frozen=True)
class ChiLambdaReport:
    involution: float
    self_adjoint: float
    orthogonal_pairing: float
    psi_reduction: float


def chi_lambda_pairing_check(assembly: OperatorAssembly, N_field: Callable[[np.ndarray], np.ndarray],
                             points: np.ndarray, rng: np.random.Generator | None = None) -> ChiLambdaReport:
    """Algebra of ``chi_lambda`` built from a unit-vector field ``N_field``.

    At each point a random inner normal ``e_n`` is drawn. Reported are the
    involution and self-adjointness residuals, the largest
    ``|<(eps c(e_n) (x) epsbar cbar(Y)) sigma, sigma>| / |sigma|^2`` over ``Y`` orthogonal
    to ``N`` and ``sigma`` in the ``-1`` eigenspace, and the largest deviation of
    ``<c(e_n) Psi sigma, sigma>`` from ``s (n/2) kappa <e_1, N> |sigma|^2``, where
    ``s = +1`` in even mode and ``-1`` in odd mode.

    Raises
    ------
    NormalizationError
        If ``N_field`` is not of unit length at some point.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    n, m = assembly.n, assembly.m
    pts = np.atleast_2d(np.asarray(points, float))
    I = np.eye(m * m)
    inv = herm = orth = red = 0.0
    sgn = 1.0 if assembly.even else -1.0
    for x in pts:
        N = np.asarray(N_field(x), float)
        if abs(np.linalg.norm(N) - 1) > UNIT_TOL:
            raise NormalizationError(f"N_field has |N| = {np.linalg.norm(N)!r} at {x}")
        e_n = _random_unit(rng, 1, n)[0]
        X = assembly.chi_matrix(e_n, N)
        inv = max(inv, np.linalg.norm(X @ X - I, 2))
        herm = max(herm, np.linalg.norm(X - X.conj().T, 2))
        s0 = rng.standard_normal(m * m) + 1j * rng.standard_normal(m * m)
        s = 0.5 * (s0 - X @ s0)
        norm2 = float(np.vdot(s, s).real)
        Y = rng.standard_normal(n)
        Y -= (Y @ N) * N
        if n > 1 and np.linalg.norm(Y) > 0:
            Y /= np.linalg.norm(Y)
            P = np.kron(assembly.left(e_n), assembly.right(Y))
            orth = max(orth, abs(np.vdot(s, P @ s)) / norm2)
        kappa = float(assembly.twist(x[None, :])[0])
        A, B = assembly.psi_factors(kappa)
        cnPsi = np.kron(assembly.rep.gamma(e_n) @ A, B)
        val = np.vdot(s, cnPsi @ s)
        pred = sgn * 0.5 * n * kappa * N[0] * norm2
        red = max(red, abs(val - pred) / norm2)
    return ChiLambdaReport(float(inv), float(herm), float(orth), float(red))
