"""Batch front end: run named verification suites and write reports.

Usage::

    rigidity-lab <suite> --config <file.toml> [--seed N] [--out DIR] [--jobs K]

Every suite is a list of independent checks. Checks run in a process pool and their
results are merged in check-id order, so ``report.json`` and ``tables/*.csv`` are
byte-identical for the same configuration and seed. Wall-clock data (runtimes,
timestamps, versions) goes to ``meta.json`` only.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import math
import os
import platform
import sys
import tempfile
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

from . import __version__
from .clifford import build_clifford_rep, clifford_residuals
from .dirac_verify import (
    assemble_operators, boundary_anticommutation_check, chi_involution_residuals,
    chi_lambda_pairing_check, convergence_orders, curvature_endomorphism_bound, manufactured_field,
    shape_endomorphism_bound, sl_identity_residual,
)
from .polytope_smoothing import (
    ConvexPolytope, boundary_defect_hyperbolic, boundary_sample, dihedral_and_matching, highest_point_cone,
    smoothing_convergence, sphere_boundary, sphere_directions, trace_norm_comparison, trace_norm_dN,
)
from .spinor_fields import (
    GridDomain, adapted_initial_data, build_killing_basis, classify_type, curvature_reconstruction_residual,
    gram_identity_check, hyperbolic_log_factor, killing_residual, perturbed_log_factor,
    v_profile,
)
from .warped_geometry import (
    WarpedMetricSpec, analytic_profile, fd_curvature, hyperbolic_metric_field, pullback_residual, reparametrize,
    rotational_angle_profile, scalar_curvature_warped, warped_metric_field,
)

log = logging.getLogger("rigidity_lab")

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
PLUMBING = "plumbing"


class ConfigError(ValueError):
    """Invalid or incomplete suite configuration."""


# ------------------------------------------------------------------ results


@dataclass(frozen=True)
class Series:
    """A named ``(x, y)`` series attached to a check; becomes one CSV table and one SVG."""

    name: str
    x: list[float]
    y: list[float]
    xlabel: str
    ylabel: str
    logx: bool = False
    logy: bool = False


@dataclass(frozen=True)
class CheckResult:
    measured: dict[str, Any]
    tolerance: dict[str, Any]
    passed: bool
    series: list[Series] = field(default_factory=list)
    diagnostics: str = ""


@dataclass(frozen=True)
class VerificationReport:
    """Outcome of one check. ``runtime`` is kept out of the byte-deterministic report."""

    suite: str
    check_id: str
    anchor: str
    inputs_digest: str
    measured: dict[str, Any]
    tolerance: dict[str, Any]
    passed: bool
    runtime: float
    diagnostics: str = ""
    series: list[Series] = field(default_factory=list)

    def to_json(self) -> dict:
        d = asdict(self)
        d.pop("runtime")
        d["series"] = [s.name for s in self.series]
        return d


@dataclass(frozen=True)
class SuiteConfig:
    suite: str
    params: dict[str, Any]
    tolerances: dict[str, float]
    seed: int | None
    out: Path
    jobs: int


def _clean(obj: Any) -> Any:
    """Plain JSON types with floats rounded-tripped through ``repr``."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def _check_rng(seed: int | None, check_id: str) -> np.random.Generator:
    key = int.from_bytes(hashlib.sha256(check_id.encode()).digest()[:8], "little")
    return np.random.default_rng([0 if seed is None else seed, key])


def _orders(errors: list[float], steps: list[float]) -> list[float]:
    return [math.log(abs(a) / abs(b)) / math.log(h0 / h1)
            for a, b, h0, h1 in zip(errors, errors[1:], steps, steps[1:])]


# ------------------------------------------------------------------ clifford-check


def check_clifford(p: dict, tol: dict, rng: np.random.Generator, n: int) -> CheckResult:
    res = clifford_residuals(build_clifford_rep(n), rng, p["trials"])
    worst = max(res.values())
    return CheckResult({"residuals": res, "max_residual": worst},
                       {"algebra": tol["algebra"]}, worst < tol["algebra"])


# ------------------------------------------------------------------ warped


def check_hyperbolic_scalar(p: dict, tol: dict, rng: np.random.Generator, n: int) -> CheckResult:
    errs = []
    for x1 in p["hyperbolic_x1"]:
        x = np.r_[x1, rng.uniform(-1, 1, n - 1)]
        errs.append(abs(fd_curvature(hyperbolic_metric_field, x, p["fd_step"]).scalar + n * (n - 1)))
    worst = max(errs)
    return CheckResult({"max_error": worst, "errors": errs, "x1": p["hyperbolic_x1"]},
                       {"curvature": tol["curvature"]}, worst < tol["curvature"])


def check_scalar_order(p: dict, tol: dict, rng: np.random.Generator) -> CheckResult:
    n = p["torus_n"]
    prof = analytic_profile(p["torus_profile"], tuple(p["torus_interval"]))
    spec = WarpedMetricSpec(n, prof, 0.0)
    metric = warped_metric_field(prof, n, "torus")
    r = float(np.mean(p["torus_interval"]))
    x = np.r_[r, rng.uniform(0, 1, n - 1)]
    exact = scalar_curvature_warped(spec, r)
    steps = p["order_steps"]
    errs = [abs(fd_curvature(metric, x, h).scalar - exact) for h in steps]
    orders = _orders(errs, steps)
    ok = all(tol["order_low"] <= o <= tol["order_high"] for o in orders)
    return CheckResult({"errors": errs, "orders": orders, "closed_form": exact},
                       {"order": [tol["order_low"], tol["order_high"]]}, ok,
                       [Series("oracle_error", steps, errs, "fd step", "|R_fd - R|", True, True)])


def check_reparametrization(p: dict, tol: dict, rng: np.random.Generator) -> CheckResult:
    prof = analytic_profile(p["torus_profile"], tuple(p["torus_interval"]))
    model = reparametrize(WarpedMetricSpec(p["torus_n"], prof, 0.0))
    res = pullback_residual(model)
    return CheckResult({"pullback_residual": res, "s_max": model.s_max}, {"pullback": tol["pullback"]},
                       res < tol["pullback"])


def check_rotational_angle(p: dict, tol: dict, rng: np.random.Generator) -> CheckResult:
    prof = analytic_profile("sin", tuple(p["angle_interval"]))
    grid = np.linspace(*p["angle_interval"], p["angle_samples"])
    g, dg, mono = rotational_angle_profile(prof, lambda r: -r, grid, dtau=lambda r: -1.0)
    return CheckResult({"monotone_decreasing": mono, "max_derivative": float(dg.max())}, {}, mono,
                       [Series("angle_profile", grid.tolist(), g.tolist(), "r", "gamma(r)")])


# ------------------------------------------------------------------ killing


def _slab(p: dict, h: float) -> GridDomain:
    return GridDomain(p["n"], tuple(p["lo"]), tuple(p["hi"]), h)


def _centre(p: dict) -> np.ndarray:
    return 0.5 * (np.array(p["lo"], float) + np.array(p["hi"], float))


def check_killing_order(p: dict, tol: dict, rng: np.random.Generator) -> CheckResult:
    rep = build_clifford_rep(p["n"])
    steps = p["h_list"]
    res = [killing_residual(build_killing_basis(rep, _slab(p, h), _centre(p))) for h in steps]
    ratios = [b / a for a, b in zip(res, res[1:])]
    ok = len(ratios) >= 3 and all(tol["ratio_low"] <= q <= tol["ratio_high"] for q in ratios)
    return CheckResult({"residuals": res, "ratios": ratios, "orders": _orders(res, steps)},
                       {"ratio": [tol["ratio_low"], tol["ratio_high"]]}, ok,
                       [Series("killing_residual", steps, res, "h", "max |nabla-hat s|", True, True)])


def check_v_constancy(p: dict, tol: dict, rng: np.random.Generator) -> CheckResult:
    rep = build_clifford_rep(p["n"])
    fld = build_killing_basis(rep, _slab(p, p["h_fine"]), _centre(p))
    kres = killing_residual(fld)
    stds = [v_profile(fld, a).c_std for a in range(rep.m)]
    ratio = max(stds) / kres
    return CheckResult({"c_std": stds, "killing_residual": kres, "ratio": ratio},
                       {"ratio": tol["v_ratio"]}, ratio <= tol["v_ratio"])


def check_gram(p: dict, tol: dict, rng: np.random.Generator) -> CheckResult:
    rep = build_clifford_rep(p["n"])
    e1 = np.eye(p["n"])[0]
    fld = build_killing_basis(rep, _slab(p, p["h_fine"]), _centre(p), initial=adapted_initial_data(rep, e1))
    g = gram_identity_check(fld)
    return CheckResult(_clean(asdict(g)), {"off_diagonal": tol["gram"]}, g.max_off_diagonal < tol["gram"])


def check_type_witness(p: dict, tol: dict, rng: np.random.Generator) -> CheckResult:
    n = p["n"]
    rep = build_clifford_rep(n)
    nu0 = rng.standard_normal(n)
    nu0 /= np.linalg.norm(nu0)
    # the second half of the adapted data lies in the +1 eigenspace of B(nu0)
    init = adapted_initial_data(rep, nu0)
    alpha = rep.m - 1
    fld = build_killing_basis(rep, _slab(p, p["h_witness"]), _centre(p), initial=init)
    rep_t = classify_type(fld, alpha)
    err = float(np.linalg.norm(rep_t.nu0 - nu0)) if rep_t.nu0 is not None else float("inf")
    return CheckResult({"kind": rep_t.kind, "c": rep_t.c, "witness_error": err, "nu0": nu0,
                        "eigen_residual": rep_t.eigen_residual},
                       {"witness": tol["witness"]}, rep_t.kind == "I" and err < tol["witness"])


def check_reconstruction(p: dict, tol: dict, rng: np.random.Generator, n: int) -> CheckResult:
    rep = build_clifford_rep(n)
    dom = GridDomain(n, (1.0,) + (0.0,) * (n - 1), (1.5,) + (0.5,) * (n - 1), p["h_reconstruction"])
    fld = build_killing_basis(rep, dom, np.array(dom.lo))
    hyp = curvature_reconstruction_residual(fld, hyperbolic_log_factor)
    pert = curvature_reconstruction_residual(fld, perturbed_log_factor(p["perturbation"]))
    ok = hyp < tol["reconstruction"] and pert > tol["negative_control"]
    return CheckResult({"hyperbolic": hyp, "perturbed": pert, "odd_projection": not rep.even},
                       {"hyperbolic_below": tol["reconstruction"], "perturbed_above": tol["negative_control"]}, ok)


# ------------------------------------------------------------------ smooth-polytope


def _cube(n: int) -> ConvexPolytope:
    return ConvexPolytope.box(np.r_[1.0, -0.5 * np.ones(n - 1)], np.r_[2.0, 0.5 * np.ones(n - 1)])


def _tilted_simplex(n: int, size: float = 1.2) -> ConvexPolytope:
    """``{y >= 0, sum y <= size}`` shifted to ``x^1 >= 1``; its top is a single vertex."""
    shift = np.r_[1.0, np.zeros(n - 1)]
    a = np.ones(n) / math.sqrt(n)
    A = np.vstack([-np.eye(n), a])
    b = np.r_[-shift, a @ shift + size / math.sqrt(n)]
    return ConvexPolytope(A, b, shift + size / (2 * n))


def check_level_set(p: dict, tol: dict, rng: np.random.Generator) -> CheckResult:
    n = p["n"]
    out, ok = {}, True
    dirs = sphere_directions(n, p["samples"], int(rng.integers(2**31)))
    for name, poly in (("cube", _cube(n)), ("simplex", _tilted_simplex(n))):
        for lam in p["lam_list"]:
            sb = boundary_sample(poly, lam, dirs)
            F = float(np.abs(sb.F_residual).max())
            lo = -math.log(poly.n_facets) / lam
            u_ok = bool(np.all(sb.u_max >= lo - tol["u_slack"]) and np.all(sb.u_max <= tol["u_slack"]))
            out[f"{name}_lam{lam:g}"] = {"F_residual": F, "u_bounds": u_ok,
                                         "u_range": [float(sb.u_max.min()), float(sb.u_max.max())], "u_lower": lo}
            ok &= F < tol["level_set"] and u_ok
    return CheckResult(out, {"level_set": tol["level_set"], "u_slack": tol["u_slack"]}, ok)


def check_sphere_oracle(p: dict, tol: dict, rng: np.random.Generator) -> CheckResult:
    n = p["n"]
    sb = sphere_boundary(np.r_[3.0, np.zeros(n - 1)], 1.0, sphere_directions(n, p["samples"], int(rng.integers(2**31))))
    tn = trace_norm_dN(sb).trace_norm
    defect = boundary_defect_hyperbolic(sb)
    e_tn = float(np.abs(tn - (n - 1)).max())
    e_def = float(np.abs(defect).max())
    return CheckResult({"trace_norm_error": e_tn, "defect": e_def},
                       {"trace_norm": tol["sphere_trace"], "defect": tol["sphere_defect"]},
                       e_tn < tol["sphere_trace"] and e_def < tol["sphere_defect"])


def check_half_space(p: dict, tol: dict, rng: np.random.Generator) -> CheckResult:
    n = p["n"]
    a = rng.standard_normal(n)
    a /= np.linalg.norm(a)
    a[0] = abs(a[0])
    a /= np.linalg.norm(a)
    x0 = np.r_[2.0, np.zeros(n - 1)]
    poly = ConvexPolytope(a[None, :], np.array([a @ x0 + 0.5]), x0, bounded=False)
    worst = {"F_residual": 0.0, "u_max": 0.0, "normal": 0.0, "dN": 0.0, "defect": 0.0}
    dirs = sphere_directions(n, p["samples"], int(rng.integers(2**31)))
    dirs = dirs[dirs @ a > 0.2]
    for lam in p["lam_list"]:
        sb = boundary_sample(poly, lam, dirs)
        worst["F_residual"] = max(worst["F_residual"], float(np.abs(sb.F_residual).max()))
        worst["u_max"] = max(worst["u_max"], float(np.abs(sb.u_max).max()))
        worst["normal"] = max(worst["normal"], float(np.abs(sb.normals - a).max()))
        worst["dN"] = max(worst["dN"], float(np.abs(sb.dN).max()))
        worst["defect"] = max(worst["defect"], float(np.abs(boundary_defect_hyperbolic(sb)).max()))
    ok = max(worst.values()) <= tol["exact"]
    return CheckResult(worst, {"exact": tol["exact"]}, ok)


def check_cube_monotone(p: dict, tol: dict, rng: np.random.Generator) -> CheckResult:
    rows = smoothing_convergence(_cube(p["n"]), p["lam_list"], p["samples"], int(rng.integers(2**31)))
    lam = [r.lam for r in rows]
    d = [r.defect_max for r in rows]
    nd = [r.normal_deviation for r in rows]
    hd = [r.hausdorff for r in rows]
    mono = lambda v: all(b <= a + tol["monotone_slack"] for a, b in zip(v, v[1:]))
    ok = mono(d) and mono(nd) and mono(hd)
    return CheckResult({"lam": lam, "defect": d, "normal_deviation": nd, "hausdorff": hd},
                       {"monotone_slack": tol["monotone_slack"]}, ok,
                       [Series("defect_vs_lambda", lam, d, "lambda", "max |defect|"),
                        Series("hausdorff_vs_lambda", lam, hd, "lambda", "Hausdorff distance", True, True)])


def check_cone(p: dict, tol: dict, rng: np.random.Generator) -> CheckResult:
    n = p["n"]
    out, ok = {}, True
    for name, poly in (("cube", _cube(n)), ("simplex", _tilted_simplex(n))):
        c = highest_point_cone(poly)
        nonneg = bool(np.all(c.coefficients >= -tol["cone"]))
        out[name] = {"active": c.active, "coefficients": c.coefficients, "residual": c.residual,
                     "nu0_norm": c.nu0_norm, "non_negative": nonneg}
        ok &= c.residual < tol["cone"] and nonneg and abs(c.nu0_norm - 1) < tol["cone"]
    return CheckResult(out, {"cone": tol["cone"]}, ok)


def check_matching(p: dict, tol: dict, rng: np.random.Generator) -> CheckResult:
    n = p["n"]
    poly = _tilted_simplex(n)
    hyp = dihedral_and_matching(poly, hyperbolic_metric_field)
    e2 = np.eye(n)[1]
    skew = dihedral_and_matching(poly, lambda x: np.eye(n) / x[0] ** 2 + 0.5 * np.outer(e2, e2))
    r_h = max(r.residual for r in hyp)
    r_s = max(r.residual for r in skew)
    return CheckResult({"conformal_residual": r_h, "non_conformal_residual": r_s},
                       {"matching": tol["matching"], "negative_control": tol["negative_control"]},
                       r_h < tol["matching"] and r_s > tol["negative_control"])


# ------------------------------------------------------------------ sl-residual


def _assembly(n: int, background: str = "flat", h: float = 0.5):
    rep = build_clifford_rep(n)
    dom = GridDomain(n, (1.0,) + (0.0,) * (n - 1), (2.0,) + (1.0,) * (n - 1), h)
    return assemble_operators(rep, dom, background=background)


def check_chi_algebra(p: dict, tol: dict, rng: np.random.Generator, n: int) -> CheckResult:
    a = _assembly(n)
    res = chi_involution_residuals(a, p["chi_trials"], rng)
    anti = boundary_anticommutation_check(a, p["frames"], rng)
    worst = max(max(res.values()), anti)
    return CheckResult({**res, "anticommutation": anti, "mode": a.mode}, {"algebra": tol["algebra"]},
                       worst < tol["algebra"])


def check_sl_flat(p: dict, tol: dict, rng: np.random.Generator, n: int) -> CheckResult:
    a = _assembly(n, h=p["h_list"][0])
    sigma = manufactured_field(n, a.m, rng, degree=p["degree"], domain=a.domain)
    reps = sl_identity_residual(a, sigma, p["h_list"])
    orders = convergence_orders(reps)
    finite = all(math.isfinite(v) for r in reps for v in r.terms.values())
    ok = finite and all(tol["order_low"] <= o <= tol["order_high"] for o in orders)
    hs = [r.h for r in reps]
    return CheckResult({"reports": [r.to_json() for r in reps], "orders": orders, "finite": finite,
                        "calibrated_constant": abs(reps[-1].residual) / reps[-1].h ** 2},
                       {"order": [tol["order_low"], tol["order_high"]]}, ok,
                       [Series("residual_vs_h", hs, [abs(r.residual) for r in reps], "h", "|residual|", True, True)])


def check_sl_killing(p: dict, tol: dict, rng: np.random.Generator, n: int) -> CheckResult:
    rep = build_clifford_rep(n)
    h = p["killing_h"]
    dom = GridDomain(n, (1.0,) + (0.0,) * (n - 1), (1.5,) + (0.5,) * (n - 1), h)
    a = assemble_operators(rep, dom, background="hyperbolic")
    r = sl_identity_residual(a, None, [h])[0]
    kres = killing_residual(build_killing_basis(rep, dom, np.array(dom.lo)))
    ok = r.terms["connection"] < tol["killing_factor"] * kres**2 and abs(r.residual) < tol["killing_factor"] * kres
    return CheckResult({"report": r.to_json(), "killing_residual": kres},
                       {"connection_below": f"{tol['killing_factor']} * kres^2",
                        "balance_below": f"{tol['killing_factor']} * kres"}, ok)


def check_r_bound(p: dict, tol: dict, rng: np.random.Generator) -> CheckResult:
    n = p["sweep_n"]
    rep = build_clifford_rep(n)
    viol, worst = 0, np.inf
    for _ in range(p["sweep_draws"]):
        psi = float(rng.uniform(0.2, 3.0))
        mu = rng.uniform(0, 1 / psi, n - 1)
        b = curvature_endomorphism_bound(rep, "sphere", psi, mu)
        viol += not b.holds
        worst = min(worst, b.margin)
    psi = 1.7
    eq = curvature_endomorphism_bound(rep, "sphere", psi, np.full(n - 1, 1 / psi))
    ok = viol == 0 and abs(eq.margin) < tol["equality"]
    return CheckResult({"violations": viol, "min_margin": worst, "equality_margin": eq.margin},
                       {"violations": 0, "equality": tol["equality"]}, ok)


def check_shape_bound(p: dict, tol: dict, rng: np.random.Generator) -> CheckResult:
    n = p["sweep_n"]
    rep = build_clifford_rep(n)
    viol, worst = 0, np.inf
    for _ in range(p["sweep_draws"]):
        psi = float(rng.uniform(0.2, 3.0))
        B = rng.standard_normal((n - 1, n - 1))
        b = shape_endomorphism_bound(rep, B @ B.T, psi, rng.uniform(0, 1 / psi, n - 1))
        viol += not b.holds
        worst = min(worst, b.margin)
    return CheckResult({"violations": viol, "min_margin": worst}, {"violations": 0}, viol == 0)


def check_chi_lambda(p: dict, tol: dict, rng: np.random.Generator, n: int) -> CheckResult:
    a = _assembly(n, "hyperbolic")
    W = rng.standard_normal((n, n))

    def N_field(x: np.ndarray) -> np.ndarray:
        v = np.tanh(W @ x) + 0.1
        return v / np.linalg.norm(v)

    pts = np.column_stack([rng.uniform(1, 2, p["chi_points"]), rng.uniform(0, 1, (p["chi_points"], n - 1))])
    r = chi_lambda_pairing_check(a, N_field, pts, rng)
    worst = max(asdict(r).values())
    return CheckResult(asdict(r), {"algebra": tol["algebra"]}, worst < tol["algebra"])


# ------------------------------------------------------------------ tracenorm


def check_tracenorm_comparison(p: dict, tol: dict, rng: np.random.Generator) -> CheckResult:
    viol, worst = 0, -np.inf
    dims = p["dims"]
    for k in range(p["draws"]):
        n = dims[k % len(dims)]
        L = rng.standard_normal((n, n))
        mu = 1 + rng.exponential(size=n)
        c = trace_norm_comparison(L, mu)
        viol += c.tn2 > c.tn1 + tol["comparison"]
        worst = max(worst, c.tn2 - c.tn1)
    return CheckResult({"violations": viol, "max_tn2_minus_tn1": worst}, {"violations": 0}, viol == 0)


def check_tracenorm_example(p: dict, tol: dict, rng: np.random.Generator) -> CheckResult:
    c = trace_norm_comparison(np.diag([1.0, 2.0]), np.array([4.0, 1.0]))
    err = max(abs(c.tn1 - 3.0), abs(c.tn2 - 2.5))
    return CheckResult({"tn1": c.tn1, "tn2": c.tn2}, {"exact": tol["exact"]}, err <= tol["exact"])


def check_tracenorm_mc(p: dict, tol: dict, rng: np.random.Generator, n: int) -> CheckResult:
    gaps = []
    for _ in range(p["mc_draws"]):
        L = rng.standard_normal((n, n))
        mu = 1 + rng.exponential(size=n)
        c = trace_norm_comparison(L, mu, p["mc_samples"], rng)
        gaps.append((c.tn2 - c.mc_max) / c.tn2)
    ok = all(-1e-12 <= g <= tol["mc_relative"] for g in gaps)
    return CheckResult({"relative_gaps": gaps}, {"mc_relative": tol["mc_relative"]}, ok)


# ------------------------------------------------------------------ registry


@dataclass(frozen=True)
class CheckSpec:
    check_id: str
    anchor: str
    func: str
    kwargs: dict = field(default_factory=dict)


SUITES: dict[str, dict[str, Any]] = {
    "clifford-check": {
        "monte_carlo": True,
        "params": {"dims": [2, 3, 4, 5, 6], "trials": 64},
        "tolerances": {"algebra": 1e-12},
        "checks": lambda p: [CheckSpec(f"clifford.relations.n{n}", "Clifford relations and omega involutions",
                                       "check_clifford", {"n": n}) for n in p["dims"]],
    },
    "warped": {
        "monte_carlo": False,
        "params": {"dims": [3, 4], "hyperbolic_x1": [3.0, 3.5, 4.0], "fd_step": 1e-3,
                   "torus_n": 4, "torus_profile": "cosh", "torus_interval": [0.2, 1.2],
                   "order_steps": [0.02, 0.01, 0.005], "angle_interval": [0.3, 1.5], "angle_samples": 25},
        "tolerances": {"curvature": 1e-6, "order_low": 1.8, "order_high": 2.2, "pullback": 1e-8},
        "checks": lambda p: [CheckSpec(f"warped.hyperbolic_scalar.n{n}", "scalar curvature of the half-space model",
                                       "check_hyperbolic_scalar", {"n": n}) for n in p["dims"]] + [
            CheckSpec("warped.scalar_order.torus", "warped product scalar curvature formula", "check_scalar_order"),
            CheckSpec("warped.reparametrization", "conformal reparametrization of a warped product",
                      "check_reparametrization"),
            CheckSpec("warped.rotational_angle", "angle of a rotational domain", "check_rotational_angle"),
        ],
    },
    "killing": {
        "monte_carlo": False,
        "params": {"n": 3, "lo": [1.0, 0.0, 0.0], "hi": [2.0, 1.0, 1.0], "h_list": [0.125, 0.0625, 0.03125, 0.015625],
                   "h_fine": 0.015625, "h_witness": 0.03125, "recon_dims": [3, 4], "h_reconstruction": 0.125,
                   "perturbation": 0.01},
        "tolerances": {"ratio_low": 0.2, "ratio_high": 0.35, "v_ratio": 10.0, "gram": 1e-6, "witness": 1e-6,
                       "reconstruction": 1e-6, "negative_control": 1e-3},
        "checks": lambda p: [
            CheckSpec("killing.residual_order", "imaginary Killing spinor equation", "check_killing_order"),
            CheckSpec("killing.v_constancy", "conserved quantity of the Killing spinor norm", "check_v_constancy"),
            CheckSpec("killing.gram", "Gram matrix of boundary-adapted Killing spinors", "check_gram"),
            CheckSpec("killing.type_witness", "type I spinors and their witness direction", "check_type_witness"),
        ] + [CheckSpec(f"killing.reconstruction.n{n}", "curvature from Killing spinors", "check_reconstruction",
                       {"n": n}) for n in p["recon_dims"]],
    },
    "smooth-polytope": {
        "monte_carlo": True,
        "params": {"n": 3, "lam_list": [10.0, 20.0, 40.0], "samples": 64},
        "tolerances": {"level_set": 1e-10, "u_slack": 1e-12, "sphere_trace": 1e-10, "sphere_defect": 1e-8,
                       "exact": 1e-12, "monotone_slack": 1e-10, "cone": 1e-9, "matching": 1e-12,
                       "negative_control": 1e-3},
        "checks": lambda p: [
            CheckSpec("polytope.level_set", "log-sum-exp smoothing level set", "check_level_set"),
            CheckSpec("polytope.sphere_oracle", "trace norm of the Gauss map of a sphere", "check_sphere_oracle"),
            CheckSpec("polytope.half_space", "smoothing of a single half-space", "check_half_space"),
            CheckSpec("polytope.cube_monotone", "convergence of smoothed polytopes", "check_cube_monotone"),
            CheckSpec("polytope.highest_point_cone", "normal cone at the highest point", "check_cone"),
            CheckSpec("polytope.matching_angle", "matching angle condition", "check_matching"),
        ],
    },
    "sl-residual": {
        "monte_carlo": True,
        "params": {"algebra_dims": [2, 3, 4, 5, 6], "chi_trials": 1000, "frames": 10000, "sl_dims": [2, 3],
                   "h_list": [0.0625, 0.03125, 0.015625], "degree": 3, "killing_dims": [3, 4], "killing_h": 0.0625,
                   "sweep_n": 4, "sweep_draws": 500, "chi_points": 200},
        "tolerances": {"algebra": 1e-12, "order_low": 1.8, "order_high": 2.2, "equality": 1e-8,
                       "killing_factor": 10.0},
        "checks": lambda p: [CheckSpec(f"sl.chi_algebra.n{n}", "boundary operator anti-commutes with chi",
                                       "check_chi_algebra", {"n": n}) for n in p["algebra_dims"]]
        + [CheckSpec(f"sl.flat_identity.n{n}", "integrated Schroedinger-Lichnerowicz identity", "check_sl_flat",
                     {"n": n}) for n in p["sl_dims"]]
        + [CheckSpec(f"sl.killing_identity.n{n}", "identity on Killing spinors of hyperbolic space",
                     "check_sl_killing", {"n": n}) for n in p["killing_dims"]]
        + [CheckSpec("sl.curvature_bound", "lower bound of the curvature endomorphism", "check_r_bound"),
           CheckSpec("sl.shape_bound", "lower bound of the boundary endomorphism", "check_shape_bound")]
        + [CheckSpec(f"sl.chi_lambda.n{n}", "homotopic boundary involution", "check_chi_lambda", {"n": n})
           for n in p["algebra_dims"]],
    },
    "tracenorm": {
        "monte_carlo": True,
        "params": {"dims": [2, 3, 4, 5, 6], "draws": 1000, "mc_dims": [2, 3, 4], "mc_draws": 3,
                   "mc_samples": 100000},
        "tolerances": {"comparison": 1e-12, "exact": 1e-12, "mc_relative": 0.01},
        "checks": lambda p: [
            CheckSpec("tracenorm.comparison", "trace norm comparison for stretched metrics", "check_tracenorm_comparison"),
            CheckSpec("tracenorm.worked_example", "trace norm comparison for stretched metrics",
                      "check_tracenorm_example"),
        ] + [CheckSpec(f"tracenorm.monte_carlo.n{n}", "trace norm as a supremum over rotations",
                       "check_tracenorm_mc", {"n": n}) for n in p["mc_dims"]],
    },
}


# ------------------------------------------------------------------ configuration


def _type_ok(default: Any, value: Any) -> bool:
    if isinstance(default, bool):
        return isinstance(value, bool)
    if isinstance(default, int):
        return isinstance(value, int) and not isinstance(value, bool)
    if isinstance(default, float):
        return isinstance(value, (int, float)) and not isinstance(value, bool)
    if isinstance(default, str):
        return isinstance(value, str)
    if isinstance(default, list):
        return isinstance(value, list) and all(
            _type_ok(default[0], v) if default else True for v in value)
    return False


def load_config(suite: str, path: Path | None, seed: int | None = None, out: str | None = None,
                jobs: int | None = None) -> SuiteConfig:
    """Parse a TOML file into a :class:`SuiteConfig`, rejecting unknown keys.

    Top-level keys: ``suite``, ``seed``, ``out``, ``jobs``, a ``[tolerances]`` table and a
    parameter table named after the suite. Command-line values take precedence.
    """
    if suite not in SUITES:
        raise ConfigError(f"unknown suite {suite!r}; choose from {sorted(SUITES)}")
    spec = SUITES[suite]
    raw: dict[str, Any] = {}
    if path is not None:
        try:
            raw = tomllib.loads(Path(path).read_text())
        except (OSError, tomllib.TOMLDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
    allowed = {"suite", "seed", "out", "jobs", "tolerances", suite}
    unknown = sorted(set(raw) - allowed)
    if unknown:
        raise ConfigError(f"unknown top-level keys: {unknown}")
    if "suite" in raw and raw["suite"] != suite:
        raise ConfigError(f"config is for suite {raw['suite']!r}, not {suite!r}")
    params = dict(spec["params"])
    for key, value in raw.get(suite, {}).items():
        if key not in params:
            raise ConfigError(f"unknown parameter [{suite}].{key}")
        if not _type_ok(params[key], value):
            raise ConfigError(f"parameter [{suite}].{key} has the wrong type")
        params[key] = [float(v) for v in value] if isinstance(params[key], list) and params[key] \
            and isinstance(params[key][0], float) else (float(value) if isinstance(params[key], float) else value)
    tols = dict(spec["tolerances"])
    for key, value in raw.get("tolerances", {}).items():
        if key not in tols:
            raise ConfigError(f"unknown tolerance {key!r}")
        if not _type_ok(0.0, value):
            raise ConfigError(f"tolerance {key!r} must be a number")
        tols[key] = float(value)
    seed = raw.get("seed") if seed is None else seed
    if seed is not None and (not isinstance(seed, int) or isinstance(seed, bool) or not 0 <= seed < 2**64):
        raise ConfigError("seed must be an unsigned 64-bit integer")
    if seed is None and spec["monte_carlo"]:
        raise ConfigError(f"suite {suite!r} draws random samples and needs a seed")
    jobs = raw.get("jobs", os.cpu_count() or 1) if jobs is None else jobs
    if not isinstance(jobs, int) or jobs < 1:
        raise ConfigError("jobs must be a positive integer")
    out = raw.get("out", "rigidity-report") if out is None else out
    return SuiteConfig(suite, params, tols, seed, Path(out), jobs)


# ------------------------------------------------------------------ execution


def _digest(suite: str, check: CheckSpec, cfg: SuiteConfig) -> str:
    blob = json.dumps(_clean({"suite": suite, "check": check.check_id, "kwargs": check.kwargs,
                              "params": cfg.params, "tolerances": cfg.tolerances, "seed": cfg.seed}),
                      sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _execute(func: str, params: dict, tols: dict, seed: int | None, check_id: str, kwargs: dict
             ) -> tuple[CheckResult, float]:
    t0 = time.perf_counter()
    try:
        res = globals()[func](params, tols, _check_rng(seed, check_id), **kwargs)
    except Exception as exc:  # noqa: BLE001 - a crashing check is a failed check
        res = CheckResult({}, {}, False, diagnostics=f"{type(exc).__name__}: {exc}")
    return res, time.perf_counter() - t0


def run_suite(cfg: SuiteConfig) -> list[VerificationReport]:
    """Run every check of ``cfg.suite`` and return reports sorted by check id."""
    checks: list[CheckSpec] = SUITES[cfg.suite]["checks"](cfg.params)
    args = [(c.func, cfg.params, cfg.tolerances, cfg.seed, c.check_id, c.kwargs) for c in checks]
    if cfg.jobs == 1 or len(checks) == 1:
        results = [_execute(*a) for a in args]
    else:
        with ProcessPoolExecutor(max_workers=min(cfg.jobs, len(checks))) as pool:
            futures = [pool.submit(_execute, *a) for a in args]
            results = [f.result() for f in futures]
    reports = []
    for c, (res, dt) in zip(checks, results):
        anchor = c.anchor or PLUMBING
        reports.append(VerificationReport(cfg.suite, c.check_id, anchor, _digest(cfg.suite, c, cfg),
                                          _clean(res.measured), _clean(res.tolerance), bool(res.passed), dt,
                                          res.diagnostics, res.series))
    return sorted(reports, key=lambda r: r.check_id)


# ------------------------------------------------------------------ output


def atomic_write(path: Path, data: str | bytes) -> None:
    """Write via a temporary file in the target directory followed by a rename."""
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = data.encode() if isinstance(data, str) else data
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _slug(text: str) -> str:
    return "".join(ch if ch.isalnum() or ch in "._-" else "_" for ch in text)


def series_csv(s: Series, check_id: str) -> str:
    """Columns ``check, <x>, <y>, order-estimate``; the order is filled for log-log series."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["check", s.xlabel, s.ylabel, "order-estimate"])
    prev = None
    for x, y in zip(s.x, s.y):
        order = ""
        if s.logx and s.logy and prev is not None and prev[0] != x and prev[1] > 0 and y > 0:
            order = repr(math.log(prev[1] / y) / math.log(prev[0] / x))
        w.writerow([check_id, repr(float(x)), repr(float(y)), order])
        prev = (x, y)
    return buf.getvalue()


def series_svg(s: Series, title: str, width: int = 480, height: int = 320) -> str:
    """Polyline plot with labelled axes; log axes use ``log10`` of the data."""
    tx = (lambda v: math.log10(v)) if s.logx else float
    ty = (lambda v: math.log10(v)) if s.logy else float
    pts = [(tx(x), ty(y)) for x, y in zip(s.x, s.y)
           if (not s.logx or x > 0) and (not s.logy or y > 0)]
    pad = 50
    xs, ys = [p[0] for p in pts], [p[1] for p in pts]
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(ys), max(ys)
    x1 = x1 if x1 > x0 else x0 + 1
    y1 = y1 if y1 > y0 else y0 + 1
    sx = lambda v: pad + (v - x0) / (x1 - x0) * (width - 2 * pad)
    sy = lambda v: height - pad - (v - y0) / (y1 - y0) * (height - 2 * pad)
    poly = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in pts)
    esc = lambda t: t.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
    xl = ("log10 " if s.logx else "") + s.xlabel
    yl = ("log10 " if s.logy else "") + s.ylabel
    return (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">\n'
        f'<rect width="100%" height="100%" fill="white"/>\n'
        f'<text x="{width / 2}" y="20" text-anchor="middle" font-size="12">{esc(title)}</text>\n'
        f'<line x1="{pad}" y1="{height - pad}" x2="{width - pad}" y2="{height - pad}" stroke="black"/>\n'
        f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{height - pad}" stroke="black"/>\n'
        f'<text x="{width / 2}" y="{height - 15}" text-anchor="middle" font-size="11">{esc(xl)} '
        f'[{x0:.3g}, {x1:.3g}]</text>\n'
        f'<text x="15" y="{height / 2}" text-anchor="middle" font-size="11" '
        f'transform="rotate(-90 15 {height / 2})">{esc(yl)} [{y0:.3g}, {y1:.3g}]</text>\n'
        f'<polyline fill="none" stroke="steelblue" stroke-width="2" points="{poly}"/>\n'
        "</svg>\n"
    )


def emit_plots(reports: list[VerificationReport], out: Path) -> list[Path]:
    """One CSV table and one SVG per non-empty series; empty series are skipped with a warning."""
    written = []
    for r in reports:
        for s in r.series:
            if not s.x:
                log.warning("series %s of %s is empty; skipped", s.name, r.check_id)
                continue
            stem = _slug(f"{r.check_id}__{s.name}")
            atomic_write(out / "tables" / f"{stem}.csv", series_csv(s, r.check_id))
            atomic_write(out / "plots" / f"{stem}.svg", series_svg(s, f"{r.check_id} ({r.anchor})"))
            written.append(out / "plots" / f"{stem}.svg")
    return written


def write_outputs(cfg: SuiteConfig, reports: list[VerificationReport], wall: float) -> None:
    body = {"suite": cfg.suite, "seed": cfg.seed, "params": _clean(cfg.params),
            "tolerances": _clean(cfg.tolerances), "passed": all(r.passed for r in reports),
            "checks": [r.to_json() for r in reports]}
    atomic_write(cfg.out / "report.json", json.dumps(body, indent=2, sort_keys=True) + "\n")
    emit_plots(reports, cfg.out)
    meta = {"suite": cfg.suite, "seed": cfg.seed, "jobs": cfg.jobs, "version": __version__,
            "python": platform.python_version(), "numpy": np.__version__,
            "started_utc": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime(time.time() - wall)),
            "wall_seconds": wall, "check_seconds": {r.check_id: r.runtime for r in reports}}
    try:
        import scipy
        meta["scipy"] = scipy.__version__
    except ImportError:  # pragma: no cover
        pass
    atomic_write(cfg.out / "meta.json", json.dumps(meta, indent=2, sort_keys=True) + "\n")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="rigidity-lab", description="Run a verification suite and write reports.")
    ap.add_argument("suite", help=f"one of: {', '.join(sorted(SUITES))}")
    ap.add_argument("--config", type=Path, help="TOML configuration file")
    ap.add_argument("--seed", type=int, help="seed for every random draw (overrides the config)")
    ap.add_argument("--out", help="output directory (default: rigidity-report)")
    ap.add_argument("--jobs", type=int, help="worker processes (default: logical cores)")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = load_config(args.suite, args.config, args.seed, args.out, args.jobs)
    except ConfigError as exc:
        ap.print_usage(sys.stderr)
        print(f"rigidity-lab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    t0 = time.perf_counter()
    reports = run_suite(cfg)
    write_outputs(cfg, reports, time.perf_counter() - t0)
    for r in reports:
        status = "PASS" if r.passed else "FAIL"
        print(f"{status} {r.check_id} [{r.anchor}]")
        if not r.passed:
            detail = r.diagnostics or json.dumps(r.measured, sort_keys=True)[:400]
            print(f"     measured: {detail}")
            print(f"     tolerance: {json.dumps(r.tolerance, sort_keys=True)}")
    return EXIT_OK if all(r.passed for r in reports) else EXIT_FAIL


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
