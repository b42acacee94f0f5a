"""Numerical verification kit for spinorial rigidity of scalar curvature.

Modules
-------
clifford
    Complex spinor representations and the boundary involutions built from them.
warped_geometry
    Warped product metrics, conformal reparametrization and finite-difference curvature.
spinor_fields
    Imaginary Killing spinors of hyperbolic space on grids and their invariants.
polytope_smoothing
    Log-sum-exp smoothing of convex polytopes and its boundary geometry.
dirac_verify
    Twisted Dirac operators, boundary involutions and the integrated Bochner identity.
cli_report
    Batch suites with deterministic JSON, CSV and SVG output.
"""

__version__ = "0.1.0"
