"""Acceptance gate: one test per criterion, each at its stated tolerance.

A summary with one PASS/FAIL line per criterion is printed at the end of the run.
"""

import math
import time

import numpy as np
import pytest

from rigidity_lab.cli_report import SUITES, main
from rigidity_lab.clifford import build_clifford_rep, clifford_residuals
from rigidity_lab.dirac_verify import (
    assemble_operators, boundary_anticommutation_check, chi_involution_residuals, convergence_orders,
    curvature_endomorphism_bound, manufactured_field, sl_identity_residual,
)
from rigidity_lab.polytope_smoothing import (
    ConvexPolytope, boundary_defect_hyperbolic, boundary_sample, smoothing_convergence, sphere_boundary,
    sphere_directions, trace_norm_comparison, trace_norm_dN,
)
from rigidity_lab.spinor_fields import (
    GridDomain, adapted_initial_data, build_killing_basis, classify_type, curvature_reconstruction_residual,
    gram_identity_check, hyperbolic_log_factor, killing_residual, perturbed_log_factor, v_profile,
)
from rigidity_lab.warped_geometry import (
    WarpedMetricSpec, analytic_profile, fd_curvature, hyperbolic_metric_field, scalar_curvature_warped,
    warped_metric_field,
)

pytestmark = pytest.mark.acceptance


def slab(n, h, lo1=1.0, side=1.0):
    return GridDomain(n, (lo1,) + (0.0,) * (n - 1), (lo1 + side,) + (side,) * (n - 1), h)


def test_criterion_1_clifford_relations(criterion):
    criterion["label"] = "criterion 1: Clifford relations n=2..6 < 1e-12, runtime < 5 s"
    t0 = time.perf_counter()
    worst = max(max(clifford_residuals(build_clifford_rep(n), np.random.default_rng(n), 64).values())
                for n in range(2, 7))
    dt = time.perf_counter() - t0
    criterion["detail"] = f"max residual {worst:.2e}, {dt:.2f} s"
    assert worst < 1e-12
    assert dt < 5


def test_criterion_2_curvature_closed_forms(criterion):
    criterion["label"] = "criterion 2: hyperbolic R within 1e-6, warped FD order in [1.8, 2.2], < 60 s"
    t0 = time.perf_counter()
    errs = [abs(fd_curvature(hyperbolic_metric_field, np.r_[x1, np.full(n - 1, 0.2)], 1e-3).scalar + n * (n - 1))
            for n in (3, 4) for x1 in (3.0, 3.5, 4.0)]
    prof = analytic_profile("cosh", (0.2, 1.2))
    exact = scalar_curvature_warped(WarpedMetricSpec(4, prof, 0.0), 0.7)
    steps = [0.02, 0.01, 0.005]
    fd = [abs(fd_curvature(warped_metric_field(prof, 4, "torus"), np.array([0.7, 0.1, 0.2, 0.3]), h).scalar - exact)
          for h in steps]
    orders = [math.log2(a / b) for a, b in zip(fd, fd[1:])]
    dt = time.perf_counter() - t0
    criterion["detail"] = f"max |R + n(n-1)| {max(errs):.2e}, orders {[round(o, 3) for o in orders]}, {dt:.2f} s"
    assert max(errs) < 1e-6
    assert all(1.8 <= o <= 2.2 for o in orders)
    assert dt < 60


def test_criterion_3_killing_machinery(criterion):
    criterion["label"] = "criterion 3: Killing order, V constancy, Gram, type-I witness, < 120 s"
    t0 = time.perf_counter()
    n = 3
    rep = build_clifford_rep(n)
    centre = np.array([1.5, 0.5, 0.5])
    res = [killing_residual(build_killing_basis(rep, slab(n, h), centre)) for h in (1 / 8, 1 / 16, 1 / 32, 1 / 64)]
    ratios = [b / a for a, b in zip(res, res[1:])]
    fine = build_killing_basis(rep, slab(n, 1 / 64), centre)
    kres = killing_residual(fine)
    c_std = max(v_profile(fine, a).c_std for a in range(rep.m))
    e1 = np.eye(n)[0]
    gram = gram_identity_check(build_killing_basis(rep, slab(n, 1 / 64), centre,
                                                   initial=adapted_initial_data(rep, e1)))
    nu0 = np.random.default_rng(3).standard_normal(n)
    nu0 /= np.linalg.norm(nu0)
    wit = classify_type(build_killing_basis(rep, slab(n, 1 / 32), centre, initial=adapted_initial_data(rep, nu0)),
                        rep.m - 1)
    werr = float(np.linalg.norm(wit.nu0 - nu0))
    dt = time.perf_counter() - t0
    criterion["detail"] = (f"ratios {[round(q, 3) for q in ratios]}, c_std/kres {c_std / kres:.2f}, "
                           f"gram {gram.max_off_diagonal:.1e}, witness {werr:.1e}, {dt:.1f} s")
    assert all(0.2 <= q <= 0.35 for q in ratios)
    assert c_std <= 10 * kres
    assert gram.max_off_diagonal < 1e-6
    assert wit.kind == "I" and werr < 1e-6
    assert dt < 120


def test_criterion_4_curvature_reconstruction(criterion):
    criterion["label"] = "criterion 4: reconstruction < 1e-6, 1% perturbation > 1e-3, odd and even n"
    out = {}
    for n in (3, 4):
        rep = build_clifford_rep(n)
        dom = GridDomain(n, (1.0,) + (0.0,) * (n - 1), (1.5,) + (0.5,) * (n - 1), 0.125)
        fld = build_killing_basis(rep, dom, np.array(dom.lo))
        out[n] = (curvature_reconstruction_residual(fld, hyperbolic_log_factor),
                  curvature_reconstruction_residual(fld, perturbed_log_factor(0.01)))
    criterion["detail"] = ", ".join(f"n={n}: {a:.1e} / {b:.1e}" for n, (a, b) in out.items())
    for a, b in out.values():
        assert a < 1e-6
        assert b > 1e-3


def test_criterion_5_boundary_operator_algebra(criterion):
    criterion["label"] = "criterion 5: chi algebra and D-boundary anticommutation < 1e-12 over 1e4 frames"
    worst = {}
    for n in range(2, 7):
        rep = build_clifford_rep(n)
        a = assemble_operators(rep, slab(n, 0.5))
        rng = np.random.default_rng(50 + n)
        r = chi_involution_residuals(a, 1000, rng)
        worst[a.mode] = max(worst.get(a.mode, 0.0), *r.values(), boundary_anticommutation_check(a, 10_000, rng))
    criterion["detail"] = ", ".join(f"{k}: {v:.1e}" for k, v in sorted(worst.items()))
    assert set(worst) == {"even-grading", "odd-volume"}
    assert max(worst.values()) < 1e-12


def test_criterion_6_integrated_identity(criterion):
    criterion["label"] = "criterion 6: flat identity order in [1.8, 2.2] over h = 1/16, 1/32, 1/64, < 120 s"
    t0 = time.perf_counter()
    detail = []
    ok = True
    for n in (2, 3):
        rep = build_clifford_rep(n)
        a = assemble_operators(rep, slab(n, 1 / 16))
        sigma = manufactured_field(n, rep.m, np.random.default_rng(60 + n), domain=a.domain)
        reps = sl_identity_residual(a, sigma, [1 / 16, 1 / 32, 1 / 64])
        orders = convergence_orders(reps)
        finite = all(math.isfinite(v) for r in reps for v in r.terms.values())
        detail.append(f"n={n} orders {[round(o, 3) for o in orders]}")
        ok &= finite and all(1.8 <= o <= 2.2 for o in orders) and len(reps[0].terms) == 8
    dt = time.perf_counter() - t0
    criterion["detail"] = "; ".join(detail) + f", {dt:.1f} s"
    assert ok
    assert dt < 120


def test_criterion_7_curvature_endomorphism_bound(criterion):
    criterion["label"] = "criterion 7: 500 admissible draws at n=4 without violation; equality within 1e-8"
    rep = build_clifford_rep(4)
    rng = np.random.default_rng(7)
    violations = 0
    for _ in range(500):
        psi = float(rng.uniform(0.2, 3.0))
        violations += not curvature_endomorphism_bound(rep, "sphere", psi, rng.uniform(0, 1 / psi, 3)).holds
    eq = max(abs(curvature_endomorphism_bound(rep, "sphere", psi, np.full(3, 1 / psi)).margin)
             for psi in (0.4, 1.0, 2.5))
    criterion["detail"] = f"violations {violations}, equality gap {eq:.1e}"
    assert violations == 0
    assert eq < 1e-8


def test_criterion_8_polytope_smoothing(criterion):
    criterion["label"] = "criterion 8: level set, sphere oracle, half-space, cube monotonicity, max bounds"
    n = 3
    cube = ConvexPolytope.box(np.r_[1.0, -0.5, -0.5], np.r_[2.0, 0.5, 0.5])
    dirs = sphere_directions(n, 64, seed=8)
    F = ub = 0.0
    for lam in (10.0, 20.0, 40.0):
        sb = boundary_sample(cube, lam, dirs)
        F = max(F, float(np.abs(sb.F_residual).max()))
        lo = -math.log(cube.n_facets) / lam
        ub = max(ub, float(np.max(np.maximum(lo - sb.u_max, sb.u_max))))
    sph = sphere_boundary(np.array([3.0, 0, 0]), 1.0, dirs)
    tn = float(np.abs(trace_norm_dN(sph).trace_norm - (n - 1)).max())
    dfc = float(np.abs(boundary_defect_hyperbolic(sph)).max())
    a = np.array([0.6, 0.8, 0.0])
    x0 = np.array([2.0, 0, 0])
    half = ConvexPolytope(a[None, :], np.array([a @ x0 + 0.5]), x0, bounded=False)
    hb = boundary_sample(half, 10.0, dirs[dirs @ a > 0.2])
    trivial = max(np.abs(hb.u_max).max(), np.abs(hb.normals - a).max(), np.abs(hb.dN).max(),
                  np.abs(boundary_defect_hyperbolic(hb)).max())
    rows = smoothing_convergence(cube, [5.0, 10.0, 20.0, 40.0], 64, 8)
    mono = all(b.defect_max <= a_.defect_max + 1e-10 and b.normal_deviation <= a_.normal_deviation + 1e-10
               for a_, b in zip(rows, rows[1:]))
    criterion["detail"] = (f"F {F:.1e}, u bound excess {ub:.1e}, sphere tn {tn:.1e}, defect {dfc:.1e}, "
                           f"half-space {trivial:.1e}, monotone {mono}")
    assert F < 1e-10
    assert ub <= 1e-12
    assert tn < 1e-10 and dfc < 1e-8
    assert trivial <= 1e-12
    assert mono


def test_criterion_9_trace_norm_comparison(criterion):
    criterion["label"] = "criterion 9: 1000 draws tn2 <= tn1; worked example exact; Monte Carlo within 1%"
    rng = np.random.default_rng(9)
    violations = 0
    for k in range(1000):
        n = 2 + k % 5
        c = trace_norm_comparison(rng.standard_normal((n, n)), 1 + rng.exponential(size=n))
        violations += c.tn2 > c.tn1 + 1e-12
    ex = trace_norm_comparison(np.diag([1.0, 2.0]), np.array([4.0, 1.0]))
    gaps = []
    for n in (2, 3, 4):
        c = trace_norm_comparison(rng.standard_normal((n, n)), 1 + rng.exponential(size=n), 100_000, rng)
        gaps.append((c.tn2 - c.mc_max) / c.tn2)
    criterion["detail"] = f"violations {violations}, example ({ex.tn1}, {ex.tn2}), MC gaps {max(gaps):.1e}"
    assert violations == 0
    assert ex.tn1 == 3.0 and ex.tn2 == 2.5
    assert all(-1e-12 <= g < 0.01 for g in gaps)


def test_criterion_10_determinism(criterion, tmp_path):
    criterion["label"] = "criterion 10: every suite re-run with the same seed gives byte-identical reports"
    mismatched = []
    for suite in sorted(SUITES):
        outs = []
        for k in range(2):
            out = tmp_path / f"{suite}-{k}"
            assert main([suite, "--seed", "2024", "--out", str(out)]) == 0
            outs.append(out)
        files = sorted(p.relative_to(outs[0]) for p in outs[0].rglob("*") if p.is_file() and p.name != "meta.json")
        assert any(f.name == "report.json" for f in files)
        mismatched += [f"{suite}/{f}" for f in files if (outs[0] / f).read_bytes() != (outs[1] / f).read_bytes()]
    criterion["detail"] = f"{len(SUITES)} suites, mismatched files: {mismatched or 'none'}"
    assert not mismatched
