import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rigidity_lab.polytope_smoothing import (
    ConvexPolytope, PolytopeError, adjacent_pairs, boundary_defect_hyperbolic, boundary_sample,
    dihedral_and_matching, gram_singular_values, highest_point_cone, hyperbolic_mean_curvature, random_orthogonal,
    smoothing_convergence, smoothing_log, sphere_boundary, sphere_directions, trace_norm_comparison, trace_norm_dN,
)
from rigidity_lab.warped_geometry import hyperbolic_metric_field


def cube(n):
    return ConvexPolytope.box(np.r_[1.0, -0.5 * np.ones(n - 1)], np.r_[2.0, 0.5 * np.ones(n - 1)])


def simplex(n, size=1.2):
    shift = np.r_[1.0, np.zeros(n - 1)]
    a = np.ones(n) / math.sqrt(n)
    return ConvexPolytope(np.vstack([-np.eye(n), a]), np.r_[-shift, a @ shift + size / math.sqrt(n)],
                          shift + size / (2 * n))


# ------------------------------------------------------------------ construction


def test_box_vertices():
    assert len(cube(3).vertices()) == 8
    assert len(simplex(3).vertices()) == 4


@pytest.mark.parametrize("A, b, p", [
    ([[2.0, 0.0], [-1.0, 0.0]], [1.0, 1.0], [0.0, 0.0]),            # non-unit normal
    ([[1.0, 0.0], [-1.0, 0.0]], [1.0, 1.0], [3.0, 0.0]),            # outside point
    ([[1.0, 0.0], [1.0, 0.0], [-1.0, 0.0]], [1.0, 2.0, 1.0], [0.0, 0.0]),  # parallel duplicate
])
def test_invalid_polytopes_rejected(A, b, p):
    with pytest.raises(PolytopeError):
        ConvexPolytope(np.array(A), np.array(b), np.array(p), bounded=False)


def test_unbounded_and_redundant_rejected():
    with pytest.raises(PolytopeError):
        ConvexPolytope(np.array([[1.0, 0.0], [-1.0, 0.0]]), np.array([1.0, 1.0]), np.zeros(2))
    A = np.array([[1.0, 0], [-1.0, 0], [0, 1.0], [0, -1.0], [1 / math.sqrt(2), 1 / math.sqrt(2)]])
    with pytest.raises(PolytopeError):
        ConvexPolytope(A, np.array([1.0, 1, 1, 1, 5]), np.zeros(2))


def test_from_halfspaces_normalizes():
    poly = ConvexPolytope.from_halfspaces(np.array([[2.0, 0], [-3.0, 0], [0, 1], [0, -1]]),
                                          np.array([2.0, 3, 1, 1]), np.zeros(2))
    np.testing.assert_allclose(poly.b, [1, 1, 1, 1])


# ------------------------------------------------------------------ smoothing


@given(x=st.lists(st.floats(-3, 3), min_size=3, max_size=3), lam=st.floats(1, 100))
def test_log_sum_exp_sandwich(x, lam):
    poly = cube(3)
    x = np.asarray(x)
    u = poly.u(x).max()
    s = smoothing_log(poly, lam, x) / lam
    assert u - 1e-12 <= s <= u + math.log(poly.n_facets) / lam + 1e-12


@pytest.mark.parametrize("n", [2, 3, 4])
@pytest.mark.parametrize("make", [cube, simplex])
@pytest.mark.parametrize("lam", [20.0, 40.0, 80.0])
def test_level_set_and_max_bounds(n, make, lam):
    poly = make(n)
    sb = boundary_sample(poly, lam, sphere_directions(n, 40, seed=n))
    assert np.abs(sb.F_residual).max() < 1e-10
    assert np.all(sb.u_max <= 1e-12)
    assert np.all(sb.u_max >= -math.log(poly.n_facets) / lam - 1e-12)


@pytest.mark.parametrize("n", [2, 3, 4])
def test_smoothed_boundary_is_convex(n):
    sb = boundary_sample(simplex(n), 15.0, sphere_directions(n, 30))
    assert np.linalg.eigvalsh(0.5 * (sb.dN + np.swapaxes(sb.dN, 1, 2))).min() > -1e-9
    np.testing.assert_allclose(np.linalg.norm(sb.normals, axis=1), 1.0, atol=1e-14)


def test_smoothing_parameter_validation():
    with pytest.raises(ValueError):
        boundary_sample(cube(2), 0.0, sphere_directions(2, 3))
    # at small lam the smoothed body no longer contains the interior point
    with pytest.raises(ValueError):
        boundary_sample(cube(3), 0.5, sphere_directions(3, 3))


def test_single_half_space_is_reproduced_exactly():
    a = np.array([0.6, 0.8, 0.0])
    x0 = np.array([2.0, 0.0, 0.0])
    poly = ConvexPolytope(a[None, :], np.array([a @ x0 + 0.5]), x0, bounded=False)
    d = sphere_directions(3, 50)
    d = d[d @ a > 0.2]
    for lam in (1.0, 10.0):
        sb = boundary_sample(poly, lam, d)
        assert np.abs(sb.u_max).max() <= 1e-12
        assert np.abs(sb.normals - a).max() <= 1e-15
        assert np.abs(sb.dN).max() <= 1e-15
        assert np.abs(boundary_defect_hyperbolic(sb)).max() <= 1e-12


# ------------------------------------------------------------------ sphere oracle


@given(c=st.floats(1.5, 5), R=st.floats(0.2, 1.0), n=st.integers(2, 5))
def test_sphere_oracle(c, R, n):
    sb = sphere_boundary(np.r_[c, np.zeros(n - 1)], R, sphere_directions(n, 20))
    assert np.abs(trace_norm_dN(sb).trace_norm - (n - 1) / R).max() < 1e-10
    # geodesic spheres of the half-space model: H_b = (n-1) c / R
    assert np.abs(hyperbolic_mean_curvature(sb) - (n - 1) * c / R).max() < 1e-10
    assert np.abs(boundary_defect_hyperbolic(sb)).max() < 1e-8


def test_unit_sphere_trace_norm_exact():
    sb = sphere_boundary(np.array([3.0, 0, 0, 0]), 1.0, sphere_directions(4, 100))
    assert np.abs(trace_norm_dN(sb).trace_norm - 3).max() < 1e-10


# ------------------------------------------------------------------ trace norms


def test_gram_singular_values_worked_example():
    sv = gram_singular_values(np.diag([1.0, 2.0]), np.diag([4.0, 1.0]))
    np.testing.assert_allclose(np.sort(sv), [0.5, 2.0], atol=1e-15)
    with pytest.raises(ValueError):
        gram_singular_values(np.eye(2), np.diag([1.0, -1.0]))


def test_trace_norm_worked_example():
    c = trace_norm_comparison(np.diag([1.0, 2.0]), np.array([4.0, 1.0]))
    assert c.tn1 == 3.0
    assert c.tn2 == 2.5


@given(seed=st.integers(0, 2**32 - 1), n=st.integers(2, 6))
def test_stretched_trace_norm_never_exceeds_original(seed, n):
    r = np.random.default_rng(seed)
    L = r.standard_normal((n, n))
    mu = 1 + r.exponential(size=n)
    c = trace_norm_comparison(L, mu)
    assert c.tn2 <= c.tn1 + 1e-12


@pytest.mark.parametrize("n", [2, 3, 4])
def test_monte_carlo_supremum_approaches_svd_value(n):
    r = np.random.default_rng(100 + n)
    L = r.standard_normal((n, n))
    mu = 1 + r.exponential(size=n)
    c = trace_norm_comparison(L, mu, mc_samples=100_000, rng=r)
    assert c.mc_max <= c.tn2 + 1e-12
    assert (c.tn2 - c.mc_max) / c.tn2 < 0.01


@pytest.mark.parametrize("L, mu", [
    (np.eye(2), np.array([0.5, 1.0])),
    (np.array([[1.0, 1.0], [1.0, 1.0]]), np.array([1.0, 2.0])),
])
def test_trace_norm_preconditions(L, mu):
    with pytest.raises(ValueError):
        trace_norm_comparison(L, mu)


def test_random_orthogonal_covers_both_components(rng):
    Q = random_orthogonal(3, 200, rng)
    np.testing.assert_allclose(np.einsum("kji,kjl->kil", Q, Q), np.broadcast_to(np.eye(3), Q.shape), atol=1e-12)
    dets = np.sign(np.linalg.det(Q))
    assert set(dets) == {-1.0, 1.0}


# ------------------------------------------------------------------ convergence, cones, angles


def test_cube_smoothing_is_monotone():
    rows = smoothing_convergence(cube(3), [5.0, 10.0, 20.0, 40.0], 64, 3)
    for key in ("hausdorff", "normal_deviation", "defect_max"):
        vals = [getattr(r, key) for r in rows]
        assert all(b <= a + 1e-10 for a, b in zip(vals, vals[1:])), (key, vals)
    assert rows[-1].hausdorff < rows[0].hausdorff


def test_highest_point_cone_cube_and_simplex():
    c = highest_point_cone(cube(3))
    assert c.active == [0]
    np.testing.assert_allclose(c.coefficients, [1.0])
    s = highest_point_cone(simplex(3))
    assert s.residual < 1e-12
    assert np.all(s.coefficients >= -1e-12)
    assert s.nu0_norm == pytest.approx(1.0)


def test_highest_point_cone_requires_bounded_height():
    poly = ConvexPolytope(np.array([[-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]]), np.array([-1.0, 1.0, 1.0]),
                          np.array([2.0, 0.0]), bounded=False)
    with pytest.raises(PolytopeError):
        highest_point_cone(poly)


def test_cube_dihedral_angles_and_matching():
    poly = cube(3)
    edges = dihedral_and_matching(poly, hyperbolic_metric_field)
    assert len(edges) == len(adjacent_pairs(poly)) == 12
    for e in edges:
        assert e.euclidean_angle == pytest.approx(math.pi / 2)
        assert e.residual < 1e-12
    with pytest.raises(ValueError):
        dihedral_and_matching(poly, pairs=[(0, 3)])


def test_matching_fails_for_non_conformal_metric():
    e2 = np.eye(3)[1]
    edges = dihedral_and_matching(simplex(3), lambda x: np.eye(3) / x[0] ** 2 + 0.5 * np.outer(e2, e2))
    assert max(e.residual for e in edges) > 1e-3
