"""Complex Clifford representations, grading operators and omega matrices.

Generators satisfy ``g_i g_j + g_j g_i = -2 delta_ij I`` and are skew-Hermitian.
The representation is built from tensor products of Pauli matrices so that the
same dimension always yields bit-identical matrices.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import reduce

import numpy as np

UNIT_TOL = 1e-12

_I2 = np.eye(2, dtype=complex)
_SX = np.array([[0, 1], [1, 0]], dtype=complex)
_SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
_SZ = np.array([[1, 0], [0, -1]], dtype=complex)


class InvalidDimensionError(ValueError):
    """Raised when a Clifford representation is requested for n < 2."""


class NormalizationError(ValueError):
    """Raised when a vector that must be a unit vector is not."""


def _kron_all(factors: list[np.ndarray]) -> np.ndarray:
    return reduce(np.kron, factors, np.eye(1, dtype=complex))


@dataclass(frozen=True)
class CliffordRep:
    """Irreducible complex representation of the Clifford algebra of R^n.

    Attributes
    ----------
    n : int
        Dimension of the underlying Euclidean space.
    m : int
        Spinor dimension ``2 ** (n // 2)``.
    generators : np.ndarray
        Array of shape ``(n, m, m)`` holding ``gamma_1 .. gamma_n``.
    grading : np.ndarray or None
        Hermitian involution anticommuting with every generator (even n only).
    volume : np.ndarray or None
        Complex volume form, central involution (odd n only).
    """

    n: int
    m: int
    generators: np.ndarray = field(repr=False)
    grading: np.ndarray | None = field(default=None, repr=False)
    volume: np.ndarray | None = field(default=None, repr=False)

    @property
    def even(self) -> bool:
        return self.n % 2 == 0

    @property
    def identity(self) -> np.ndarray:
        return np.eye(self.m, dtype=complex)

    def gamma(self, X: np.ndarray) -> np.ndarray:
        """Clifford action ``c(X) = sum_i X_i gamma_i`` of a vector (or stack of vectors)."""
        X = np.asarray(X)
        return np.tensordot(X, self.generators, axes=([-1], [0]))

    def conjugate(self, U: np.ndarray) -> "CliffordRep":
        """Return the equivalent representation ``U^* (.) U``."""
        Uh = U.conj().T
        gens = np.einsum("ab,ibc,cd->iad", Uh, self.generators, U)
        grading = None if self.grading is None else Uh @ self.grading @ U
        volume = None if self.volume is None else Uh @ self.volume @ U
        return CliffordRep(self.n, self.m, gens, grading, volume)

    def to_json(self) -> list:
        """Generators as nested lists of ``[re, im]`` pairs (row-major)."""
        return [
            [[[float(z.real), float(z.imag)] for z in row] for row in g]
            for g in self.generators
        ]


def build_clifford_rep(n: int) -> CliffordRep:
    """Build the standard representation for dimension ``n``.

    Parameters
    ----------
    n : int
        Dimension, at least 2.

    Returns
    -------
    CliffordRep
        For even ``n`` the grading is ``sigma_z`` tensored ``n/2`` times; for odd
        ``n`` the volume form ``i^((n+1)/2) gamma_1 ... gamma_n`` is attached.
    """
    if int(n) != n or n < 2:
        raise InvalidDimensionError(f"Clifford representation needs integer n >= 2, got {n}")
    n = int(n)
    k = n // 2
    m = 2**k
    herm = []
    # Jordan-Wigner style Hermitian generators G_i with G_i G_j + G_j G_i = 2 delta_ij
    for j in range(k):
        left = [_SZ] * j
        right = [_I2] * (k - j - 1)
        herm.append(_kron_all(left + [_SX] + right))
        herm.append(_kron_all(left + [_SY] + right))
    if n % 2 == 1:
        herm.append(_kron_all([_SZ] * k))
    gens = 1j * np.stack(herm)
    if n % 2 == 0:
        grading = _kron_all([_SZ] * k)
        return CliffordRep(n, m, gens, grading=grading)
    prod = reduce(np.matmul, gens, np.eye(m, dtype=complex))
    volume = (1j) ** ((n + 1) // 2) * prod
    # drop the rounding noise of the complex power
    volume = np.round(volume.real) + 1j * np.round(volume.imag)
    return CliffordRep(n, m, gens, volume=volume)


def _require_unit(X: np.ndarray, tol: float = UNIT_TOL) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    norm = np.linalg.norm(X)
    if abs(norm - 1.0) > tol:
        raise NormalizationError(f"expected a unit vector, got |X| = {norm!r}")
    return X


def omega_unnormalized(rep: CliffordRep, X: np.ndarray) -> np.ndarray:
    """Linear map ``X -> omega_X`` without the unit-length check."""
    X = np.asarray(X, dtype=float)
    if X.shape[-1] != rep.n:
        raise ValueError(f"vector has {X.shape[-1]} components, expected {rep.n}")
    if rep.even:
        return rep.grading @ rep.gamma(X)
    return 1j * rep.gamma(X)


@dataclass(frozen=True)
class OmegaMatrix:
    """Hermitian involution attached to a unit vector."""

    X: np.ndarray
    matrix: np.ndarray


def omega_matrix(rep: CliffordRep, X: np.ndarray) -> OmegaMatrix:
    """Return ``omega_X``: ``eps c(X)`` for even n, ``sqrt(-1) c(X)`` for odd n.

    Raises
    ------
    NormalizationError
        If ``|X|`` differs from 1 by more than ``1e-12``.
    """
    X = _require_unit(X)
    return OmegaMatrix(X.copy(), omega_unnormalized(rep, X))


def diagonalize_omega(rep: CliffordRep, N0: np.ndarray) -> np.ndarray:
    """Unitary ``U`` with ``U^* omega_N0 U = diag(+1 (m/2 times), -1 (m/2 times))``.

    If ``omega_N0`` is already diagonal with that ordering the identity is returned.
    """
    w = omega_matrix(rep, N0).matrix
    m = rep.m
    target = np.diag(np.r_[np.ones(m // 2), -np.ones(m - m // 2)]).astype(complex)
    if np.allclose(w, target, atol=UNIT_TOL, rtol=0):
        return np.eye(m, dtype=complex)
    vals, vecs = np.linalg.eigh(w)
    order = np.argsort(-vals, kind="stable")
    U = vecs[:, order]
    # fix the phase of each column so the result does not depend on LAPACK details
    for j in range(m):
        col = U[:, j]
        piv = np.argmax(np.abs(col) > 1e-8)
        U[:, j] = col * (abs(col[piv]) / col[piv])
    return U


def clifford_residuals(rep: CliffordRep, rng: np.random.Generator | None = None,
                       trials: int = 16) -> dict[str, float]:
    """Max residuals of every defining identity of ``rep``.

    Random unit vectors (``trials`` pairs) exercise the omega identities.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    n, I = rep.n, rep.identity
    g = rep.generators
    out: dict[str, float] = {}
    anti = 0.0
    for i in range(n):
        for j in range(n):
            r = g[i] @ g[j] + g[j] @ g[i] + 2.0 * (i == j) * I
            anti = max(anti, np.linalg.norm(r, 2))
    out["anticommutation"] = anti
    out["skew_hermitian"] = max(np.linalg.norm(gi + gi.conj().T, 2) for gi in g)
    if rep.even:
        e = rep.grading
        out["grading_hermitian"] = np.linalg.norm(e - e.conj().T, 2)
        out["grading_involution"] = np.linalg.norm(e @ e - I, 2)
        out["grading_anticommutes"] = max(np.linalg.norm(e @ gi + gi @ e, 2) for gi in g)
    else:
        v = rep.volume
        out["volume_involution"] = np.linalg.norm(v @ v - I, 2)
        out["volume_central"] = max(np.linalg.norm(v @ gi - gi @ v, 2) for gi in g)
    herm = inv = pair = orth = 0.0
    for _ in range(trials):
        X, Y = rng.standard_normal((2, n))
        X /= np.linalg.norm(X)
        Y /= np.linalg.norm(Y)
        wx = omega_matrix(rep, X).matrix
        wy = omega_matrix(rep, Y).matrix
        herm = max(herm, np.linalg.norm(wx - wx.conj().T, 2))
        inv = max(inv, np.linalg.norm(wx @ wx - I, 2))
        pair = max(pair, np.linalg.norm(wx @ wy + wy @ wx - 2 * (X @ Y) * I, 2))
        Z = Y - (Y @ X) * X
        Z /= np.linalg.norm(Z)
        wz = omega_matrix(rep, Z).matrix
        orth = max(orth, np.linalg.norm(wx @ wz + wz @ wx, 2))
    out["omega_hermitian"] = herm
    out["omega_involution"] = inv
    out["omega_anticommutator"] = pair
    out["omega_orthogonal"] = orth
    return {k: float(v) for k, v in out.items()}
