"""Riemannian backends and their curvature.

A :class:`MetricField` evaluates a symmetric positive-definite matrix
a_ij(x) on a single chart; evaluation accepts plain floats or jets, so all
x-derivatives of the metric flow through the jet engine.  On top of that
this module provides Christoffel symbols, the geodesic spray of alpha, the
Ricci curvature of any spray (shared with the Finsler engine), and the
warped-product construction

    alpha^2 = dt (x) dt + h(t)^2 hat_alpha^2,      h'' + mu h = 0,

which realizes every pair (alpha, beta) with Einstein alpha and a conformal
one-form with c^2 = kappa - mu b^2.

Charts only, no atlases: every statement verified here is local, so a single
chart with a stated valid domain suffices.  Evaluation where the warping
factor h(t) vanishes (e.g. the poles of a round sphere) raises
:class:`GeometryError` instead of returning a degenerate matrix.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import jets
from .jets import Jet, extract, seed, value

__all__ = [
    "GeometryError",
    "MetricField",
    "CurvatureData",
    "SprayJets",
    "euclidean",
    "space_form",
    "make_warped",
    "christoffel",
    "spray_alpha",
    "ricci_alpha",
    "ricci_of_spray",
    "richardson_fd",
]


class GeometryError(ValueError):
    """Domain violation on a chart: non-SPD metric, h(t) <= 0, singular data."""


# ---------------------------------------------------------------------------
# MetricField
# ---------------------------------------------------------------------------

class MetricField:
    """A Riemannian metric a_ij(x) on an n-dimensional chart.

    Parameters
    ----------
    dim : chart dimension (>= 1; curvature operations need >= 2)
    entries : callable mapping a length-``dim`` list of scalars-or-jets to the
        full matrix [[a_ij]] as a list of lists (symmetric).
    backend : short tag describing the construction, for reports.
    """

    def __init__(self, dim: int, entries: Callable, backend: str = "explicit", meta: dict | None = None):
        if dim < 1:
            raise GeometryError(f"metric dimension must be >= 1, got {dim}")
        self.dim = dim
        self._entries = entries
        self.backend = backend
        self.meta = dict(meta or {})

    # -- evaluation -----------------------------------------------------------
    def matrix_at(self, X: Sequence) -> list[list]:
        """Evaluate a_ij at a point given as floats or jets; checks SPD values."""
        A = self._entries(list(X))
        vals = np.array([[value(A[i][j]) for j in range(self.dim)] for i in range(self.dim)])
        try:
            np.linalg.cholesky(vals)
        except np.linalg.LinAlgError:
            raise GeometryError(
                f"metric not positive definite at x={[value(x) for x in X]}"
            ) from None
        return A

    def matrix(self, x: Sequence[float]) -> np.ndarray:
        A = self.matrix_at([float(v) for v in x])
        return np.array([[value(e) for e in row] for row in A])

    def inverse(self, x: Sequence[float]) -> np.ndarray:
        return np.linalg.inv(self.matrix(x))

    def alpha2(self, x, y):
        """a_ij y^i y^j; x entries may be floats/jets and y likewise."""
        A = self.matrix_at(x)
        n = self.dim
        return sum(A[i][j] * y[i] * y[j] for i in range(n) for j in range(n))

    def alpha(self, x: Sequence[float], y: Sequence[float]) -> float:
        return math.sqrt(self.alpha2(list(x), list(y)))

    def __repr__(self):
        return f"MetricField(dim={self.dim}, backend={self.backend!r})"


def euclidean(dim: int) -> MetricField:
    def entries(X):
        return [[1.0 if i == j else 0.0 for j in range(dim)] for i in range(dim)]

    return MetricField(dim, entries, backend="euclidean")


def space_form(dim: int, curvature: float) -> MetricField:
    """Constant sectional curvature metric a_ij = delta_ij / (1 + c|x|^2/4)^2.

    For c < 0 the chart is the ball |x|^2 < 4/|c|.
    """
    c = float(curvature)
    if c == 0.0:
        return euclidean(dim)

    def entries(X):
        r2 = sum(xi * xi for xi in X)
        conf = 1.0 + 0.25 * c * r2
        if value(conf) <= 0.0:
            raise GeometryError(f"space-form chart exceeded: 1 + c|x|^2/4 = {value(conf)}")
        w = 1.0 / (conf * conf)
        zero = 0.0 * w  # keeps jet ring when X are jets
        return [[w if i == j else zero for j in range(dim)] for i in range(dim)]

    return MetricField(dim, entries, backend="space-form", meta={"curvature": c})


# ---------------------------------------------------------------------------
# Warped products
# ---------------------------------------------------------------------------

def _warp_profile(mu: float, h0: float, h0p: float):
    """Closed-form solution of h'' + mu h = 0 with h(0)=h0, h'(0)=h0p."""
    if mu > 0.0:
        rt = math.sqrt(mu)

        def h(t):
            return h0 * jets.cos(rt * t) + (h0p / rt) * jets.sin(rt * t)

        def hp(t):
            return -h0 * rt * jets.sin(rt * t) + h0p * jets.cos(rt * t)

    elif mu == 0.0:

        def h(t):
            return h0 + h0p * t

        def hp(t):
            return h0p + 0.0 * t

    else:
        rt = math.sqrt(-mu)

        def h(t):
            ep, em = jets.exp(rt * t), jets.exp(-rt * t)
            return h0 * (ep + em) * 0.5 + (h0p / rt) * (ep - em) * 0.5

        def hp(t):
            ep, em = jets.exp(rt * t), jets.exp(-rt * t)
            return h0 * rt * (ep - em) * 0.5 + h0p * (ep + em) * 0.5

    return h, hp


def make_warped(
    mu: float,
    h_init: tuple[float, float],
    hat: MetricField,
    hat_einstein_const: float | None = None,
    check_hat: bool = True,
) -> MetricField:
    """Warped-product metric dt^2 + h(t)^2 hat^2 on coordinates (t, xhat).

    ``h`` solves h'' + mu h = 0 with the given initial data, and
    kappa := h'(t)^2 + mu h(t)^2 is constant (stored in ``meta``).  The hat
    metric must be Einstein with constant kappa in the normalization
    hat_Ric = (hat.dim - 1) * kappa * hat_alpha^2; this is the caller's
    assertion, spot-checked by Ricci sampling when ``check_hat`` is set and
    the hat has dimension >= 2 (one-dimensional hats are flat, nothing to
    check).  Evaluation is restricted to h(t) > 0.
    """
    h0, h0p = float(h_init[0]), float(h_init[1])
    kappa = h0p * h0p + mu * h0 * h0
    if hat_einstein_const is not None and abs(hat_einstein_const - kappa) > 1e-12 * max(
        1.0, abs(kappa)
    ):
        raise GeometryError(
            f"hat Einstein constant {hat_einstein_const} does not match "
            f"h'(0)^2 + mu h(0)^2 = {kappa}"
        )
    h, hp = _warp_profile(mu, h0, h0p)
    nd = hat.dim + 1

    def entries(X):
        t, xh = X[0], X[1:]
        ht = h(t)
        if value(ht) <= 0.0:
            raise GeometryError(f"warping factor h(t) = {value(ht)} <= 0 at t = {value(t)}")
        h2 = ht * ht
        Ah = hat._entries(xh)
        out = [[0.0 * h2 for _ in range(nd)] for _ in range(nd)]
        out[0][0] = 1.0 + 0.0 * h2
        for a in range(hat.dim):
            for b in range(hat.dim):
                out[1 + a][1 + b] = h2 * Ah[a][b]
        return out

    g = MetricField(
        nd,
        entries,
        backend="warped-product",
        meta={"mu": mu, "h0": h0, "h0p": h0p, "kappa": kappa, "hat": hat, "h": h, "hp": hp},
    )

    if check_hat and hat.dim >= 2:
        # Einstein spot-check of the hat: Ric_hat = (hat.dim - 1) kappa alpha_hat^2
        pts = [
            (np.full(hat.dim, 0.05), np.linspace(1.0, 1.5, hat.dim)),
            (np.linspace(-0.1, 0.12, hat.dim), np.linspace(0.8, -1.1, hat.dim)),
        ]
        for xh, yh in pts:
            ric, err = ricci_alpha(hat, xh, yh)
            a2 = hat.alpha2(list(xh), list(yh))
            want = (hat.dim - 1) * kappa * a2
            if abs(ric - want) > 1e-6 * max(1.0, abs(want)) + 10 * err:
                raise GeometryError(
                    f"hat metric fails its Einstein spot-check at {xh}: "
                    f"Ric = {ric}, expected {want}"
                )
    return g


# ---------------------------------------------------------------------------
# Christoffel symbols and the spray of alpha
# ---------------------------------------------------------------------------

@dataclass
class CurvatureData:
    """Point data of the Levi-Civita connection at x (plus y where noted)."""

    christoffel: np.ndarray  # (n, n, n), Gamma^i_jk, symmetric in (j, k)
    spray: np.ndarray | None = None  # (n,), 1/2 Gamma^i_jk y^j y^k
    ricci: float | None = None
    ricci_fd_error: float | None = None


def christoffel(g: MetricField, x: Sequence[float]) -> np.ndarray:
    """Gamma^i_jk = 1/2 a^il (d_k a_lj + d_j a_lk - d_l a_jk), by order-1 jets."""
    n = g.dim
    X = seed([float(v) for v in x], range(n), 1)
    A = g.matrix_at(X)
    vals = np.array([[value(A[i][j]) for j in range(n)] for i in range(n)])
    inv = np.linalg.inv(vals)
    dA = np.empty((n, n, n))
    for i in range(n):
        for j in range(i, n):
            grad = A[i][j].c[1:] if isinstance(A[i][j], Jet) else np.zeros(n)
            dA[i, j, :] = grad
            dA[j, i, :] = grad
    # dA[l, j, k] = d a_lj / d x^k ; sym[l, j, k] = d_k a_lj + d_j a_lk - d_l a_jk
    sym = dA + dA.transpose(0, 2, 1) - dA.transpose(2, 0, 1)
    return 0.5 * np.einsum("il,ljk->ijk", inv, sym)


def spray_alpha(g: MetricField, x: Sequence[float], y: Sequence[float]) -> np.ndarray:
    """Geodesic spray of alpha: G^i = 1/2 Gamma^i_jk y^j y^k."""
    y = np.asarray(y, dtype=float)
    if not y.any():
        raise GeometryError("spray undefined at y = 0")
    Gam = christoffel(g, x)
    return 0.5 * np.einsum("ijk,j,k->i", Gam, y, y)


# ---------------------------------------------------------------------------
# Ricci curvature of a spray (shared with the Finsler engine)
# ---------------------------------------------------------------------------

@dataclass
class SprayJets:
    """Spray data at one (x, y): values and y-derivatives as requested."""

    values: np.ndarray            # (n,)
    ygrad: np.ndarray | None      # (n, n): ygrad[i, j] = dG^i/dy^j
    yhess: np.ndarray | None      # (n, n, n): yhess[i, j, k] = d2 G^i/dy^j dy^k


def richardson_fd(f: Callable[[float], np.ndarray], h: float):
    """Central difference with steps h and h/2, Richardson-combined.

    Returns (derivative, error_estimate); the estimate is |D(h/2) - D(h)| / 3,
    the standard cross-check of the two step sizes.
    """
    d1 = (f(h) - f(-h)) / (2.0 * h)
    d2 = (f(h / 2) - f(-h / 2)) / h
    comb = (4.0 * d2 - d1) / 3.0
    err = np.max(np.abs(d2 - d1)) / 3.0
    return comb, float(err)


def ricci_of_spray(
    spray_eval: Callable[[np.ndarray, int], SprayJets],
    x: Sequence[float],
    y: Sequence[float],
    rel_step: float = 1e-3,
) -> tuple[float, float]:
    """Ricci curvature of a spray G(x, y):

        Ric = 2 dG^i/dx^i - y^j d2G^i/dx^j dy^i
              + 2 G^j d2G^i/dy^j dy^i - dG^i/dy^j dG^j/dy^i

    y-derivatives come analytically from ``spray_eval`` (jets); the two
    x-derivative layers use central differences at steps h, h/2 relative to
    |x| + 1, Richardson-combined, and the returned second element is the
    accumulated FD error estimate.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n = x.size
    base = spray_eval(x, 2)
    G, Gy, Gyy = base.values, base.ygrad, base.yhess

    term3 = 2.0 * float(np.einsum("j,iji->", G, Gyy))
    term4 = float(np.einsum("ij,ji->", Gy, Gy))

    h = rel_step * (1.0 + float(np.linalg.norm(x)))
    # 2 dG^i/dx^i
    term1 = 0.0
    err1 = 0.0
    for k in range(n):
        ek = np.zeros(n)
        ek[k] = 1.0
        d, e = richardson_fd(lambda t, ek=ek, k=k: spray_eval(x + t * ek, 0).values[k], h)
        term1 += 2.0 * float(d)
        err1 += 2.0 * e
    # y^j d(trace dG/dy)/dx^j, as a directional derivative along y
    ynorm = float(np.linalg.norm(y))
    u = y / ynorm
    d2, e2 = richardson_fd(
        lambda t: float(np.trace(spray_eval(x + t * u, 1).ygrad)), h
    )
    term2 = ynorm * float(d2)
    err2 = ynorm * e2

    return term1 - term2 + term3 - term4, err1 + err2


def _alpha_spray_eval(g: MetricField, y: np.ndarray):
    """Spray evaluator of a Riemannian metric; all y-derivatives analytic."""

    def ev(xp: np.ndarray, yorder: int) -> SprayJets:
        Gam = christoffel(g, xp)
        vals = 0.5 * np.einsum("ijk,j,k->i", Gam, y, y)
        ygrad = np.einsum("ijk,k->ij", Gam, y) if yorder >= 1 else None
        yhess = Gam if yorder >= 2 else None
        return SprayJets(vals, ygrad, yhess)

    return ev


def ricci_alpha(
    g: MetricField, x: Sequence[float], y: Sequence[float], rel_step: float = 1e-3
) -> tuple[float, float]:
    """Ricci curvature Ric(x, y) of a Riemannian metric, with FD error estimate.

    Computed through the spray formula (the Finsler Ricci specialized to the
    quadratic spray of alpha), so the same pipeline serves every backend,
    including wrapped/deformed metrics with no closed-form curvature.
    """
    y = np.asarray(y, dtype=float)
    if not y.any():
        raise GeometryError("Ricci undefined at y = 0")
    return ricci_of_spray(_alpha_spray_eval(g, y), x, y, rel_step=rel_step)
