import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rigidity_lab.clifford import (
    InvalidDimensionError, NormalizationError, build_clifford_rep, clifford_residuals, diagonalize_omega,
    omega_matrix,
)

SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]])
SZ = np.diag([1.0 + 0j, -1.0])

dims = st.integers(min_value=2, max_value=6)


def unit(draw_vec):
    v = np.asarray(draw_vec, float)
    return v / np.linalg.norm(v)


vectors = lambda n: st.lists(st.floats(-1, 1), min_size=n, max_size=n).filter(
    lambda v: np.linalg.norm(v) > 0.1)


def test_planar_generators_match_pauli_oracle():
    rep = build_clifford_rep(2)
    np.testing.assert_array_equal(rep.generators[0], 1j * SX)
    np.testing.assert_array_equal(rep.generators[1], 1j * SY)
    np.testing.assert_array_equal(rep.grading, SZ)


def test_three_dimensional_volume_form_is_minus_identity():
    # (i)^2 (i sx)(i sy)(i sz) = -(-i)(i) I = -I
    rep = build_clifford_rep(3)
    np.testing.assert_array_equal(rep.volume, -np.eye(2))


@pytest.mark.parametrize("n, m", [(2, 2), (3, 2), (4, 4), (5, 4), (6, 8), (7, 8)])
def test_spinor_dimension(n, m):
    rep = build_clifford_rep(n)
    assert rep.m == m
    assert rep.generators.shape == (n, m, m)
    assert (rep.grading is None) == (n % 2 == 1)
    assert (rep.volume is None) == (n % 2 == 0)


@pytest.mark.parametrize("n", [0, 1, 2.5, -3])
def test_invalid_dimension_rejected(n):
    with pytest.raises(InvalidDimensionError):
        build_clifford_rep(n)


@pytest.mark.parametrize("n", range(2, 7))
def test_all_defining_relations_hold(n):
    res = clifford_residuals(build_clifford_rep(n), np.random.default_rng(n), trials=32)
    assert max(res.values()) < 1e-12, res


@given(n=dims, data=st.data())
def test_omega_is_hermitian_involution(n, data):
    rep = build_clifford_rep(n)
    X = unit(data.draw(vectors(n)))
    w = omega_matrix(rep, X).matrix
    assert np.abs(w - w.conj().T).max() < 1e-12
    assert np.abs(w @ w - np.eye(rep.m)).max() < 1e-12


@given(n=dims, data=st.data())
def test_omega_anticommutes_for_orthogonal_vectors(n, data):
    rep = build_clifford_rep(n)
    X = unit(data.draw(vectors(n)))
    Y = np.asarray(data.draw(vectors(n)))
    Y = Y - (Y @ X) * X
    if np.linalg.norm(Y) < 1e-3:
        return
    Y /= np.linalg.norm(Y)
    wx, wy = omega_matrix(rep, X).matrix, omega_matrix(rep, Y).matrix
    assert np.abs(wx @ wy + wy @ wx).max() < 1e-12


@given(n=dims, data=st.data())
def test_gamma_is_linear(n, data):
    rep = build_clifford_rep(n)
    X = np.asarray(data.draw(vectors(n)))
    Y = np.asarray(data.draw(vectors(n)))
    a = data.draw(st.floats(-3, 3))
    np.testing.assert_allclose(rep.gamma(a * X + Y), a * rep.gamma(X) + rep.gamma(Y), atol=1e-12)


@pytest.mark.parametrize("n", range(2, 7))
def test_diagonalization_orders_eigenvalues(n, rng):
    rep = build_clifford_rep(n)
    N = rng.standard_normal(n)
    N /= np.linalg.norm(N)
    U = diagonalize_omega(rep, N)
    D = U.conj().T @ omega_matrix(rep, N).matrix @ U
    half = rep.m // 2
    np.testing.assert_allclose(D, np.diag(np.r_[np.ones(half), -np.ones(half)]), atol=1e-12)
    np.testing.assert_allclose(U.conj().T @ U, np.eye(rep.m), atol=1e-12)


def test_diagonalization_is_deterministic():
    rep = build_clifford_rep(4)
    N = np.array([0.6, 0.0, 0.8, 0.0])
    np.testing.assert_array_equal(diagonalize_omega(rep, N), diagonalize_omega(rep, N))


def test_conjugated_representation_keeps_relations(rng):
    rep = build_clifford_rep(5)
    U = np.linalg.qr(rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4)))[0]
    assert max(clifford_residuals(rep.conjugate(U), rng).values()) < 1e-12


@pytest.mark.parametrize("scale", [0.5, 1 + 1e-9, 2.0])
def test_non_unit_vector_rejected(scale):
    with pytest.raises(NormalizationError):
        omega_matrix(build_clifford_rep(3), scale * np.array([1.0, 0, 0]))


def test_json_round_trip():
    rep = build_clifford_rep(3)
    arr = np.array(rep.to_json())
    np.testing.assert_array_equal(arr[..., 0] + 1j * arr[..., 1], rep.generators)
