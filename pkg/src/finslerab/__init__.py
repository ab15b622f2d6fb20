"""Numerical engine for general (alpha,beta)-metrics F = alpha * phi(b^2, beta/alpha).

Subpackages are organized by what they compute:

* :mod:`finslerab.jets`    -- truncated multivariate Taylor arithmetic
* :mod:`finslerab.riemann` -- Riemannian backends, Christoffel symbols, sprays,
  Ricci curvature, warped-product construction
* :mod:`finslerab.oneform` -- one-forms, covariant derivatives, conformality
* :mod:`finslerab.phi`     -- defining-function families phi(b^2, s)
* :mod:`finslerab.gab`     -- the Finsler engine: F, sprays (formula and
  derivative-oracle), Ricci curvature, Einstein / projective / Douglas checks
* :mod:`finslerab.deform`  -- metric-pair and defining-function deformations
* :mod:`finslerab.pde`     -- residual evaluators for the defining PDEs
* :mod:`finslerab.cli`     -- configuration-driven verification runs
"""

from . import jets  # noqa: F401  (siblings imported once implemented)

__version__ = "0.1.0"
