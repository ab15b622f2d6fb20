"""Defining functions phi(b^2, s) and their exact partial derivatives.

Every family is stored as a closed-form expression tree over the jet-generic
scalar operations, so one implementation serves three uses:

* plain evaluation,
* the order-2 partial record :class:`PhiJet` (seed (b^2, s), read back), and
* evaluation at jet-valued arguments inside the spray/Ricci pipelines, where
  the chain rule through s = beta/alpha must reach third and fourth order.

Families
--------
``randers``     phi = (sqrt(1 - b^2 + s^2) + s) / (1 - b^2)
``square``      phi = (sqrt(1 - b^2 + s^2) + s)^2 / ((1-b^2)^2 sqrt(1 - b^2 + s^2))
``projflat``    phi = eta(b^2) rho phibar(nu/rho) built from a 1-d profile
                phibar solving {1 + (k1+k3) t^2 + k2 t^4} phibar'' =
                (k1 + k2 t^2)(phibar - t phibar')
``solution``    the Einstein families parameterized by (sigma, C, D) and a
                branch selector; all branches solve the pair of PDEs checked
                in :mod:`finslerab.pde` with sigma = K / kappa
``berwald``     phi = phibar(s/b) / b for an arbitrary positive profile
``constant``    phi = const (the Riemannian case)

Each family declares an open b^2-interval on which all radicands are
positive (shrunk by a 1e-6 relative margin) together with the rule
|s| <= b; evaluation failures inside raise :class:`PhiDomainError` carrying
the offending (b^2, s).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import integrate, optimize

from . import jets
from .jets import Jet, JetDomainError, extract, seed, value

__all__ = [
    "PhiDomainError",
    "PhiJet",
    "PhiDomain",
    "PhiSpec",
    "RegularityResult",
    "constant_phi",
    "randers_phi",
    "square_phi",
    "ode_ft_solve",
    "OdeCurve",
    "projflat_family",
    "solution_family",
    "berwald_family",
    "regularity_check",
    "with_s3_perturbation",
]


class PhiDomainError(ValueError):
    """Evaluation of a defining function outside its declared domain."""


@dataclass(frozen=True)
class PhiJet:
    """phi and its exact partials to order 2 at one (b^2, s).

    Subscript 1 is the b^2-slot, subscript 2 the s-slot; the mixed partial is
    stored once (symmetry is definitional).
    """

    phi: float
    phi1: float
    phi2: float
    phi11: float
    phi12: float
    phi22: float


_MARGIN = 1e-6


@dataclass(frozen=True)
class PhiDomain:
    """Open b^2-interval plus the fiber rule |s| <= b < b_o."""

    b2_lo: float
    b2_hi: float

    @property
    def b_o(self) -> float:
        return math.sqrt(self.b2_hi)

    def contains(self, b2: float, s: float) -> bool:
        return self.b2_lo <= b2 < self.b2_hi and s * s <= b2 * (1.0 + 1e-12)

    def b2_values(self, count: int, b2_max: float | None = None) -> np.ndarray:
        hi = self.b2_hi if b2_max is None else min(b2_max, self.b2_hi)
        if not math.isfinite(hi):
            raise PhiDomainError("unbounded b^2 range: pass b2_max to place a grid")
        lo = self.b2_lo
        return np.linspace(lo + _MARGIN * (hi - lo), hi - _MARGIN * (hi - lo), count)

    def grid(self, nb: int = 31, ns: int = 31, b2_max: float | None = None):
        """Tensor grid of (b^2, s) nodes: rows of b^2, |s| <= b on each row."""
        pts = []
        for b2 in self.b2_values(nb, b2_max):
            b = math.sqrt(max(b2, 0.0))
            for s in np.linspace(-b * (1 - 1e-9), b * (1 - 1e-9), ns):
                pts.append((float(b2), float(s)))
        return pts


def _shrunk(lo: float, hi: float) -> PhiDomain:
    if not math.isfinite(hi):
        return PhiDomain(max(lo, 0.0), hi)
    pad = _MARGIN * max(hi - lo, 1.0)
    return PhiDomain(max(lo, 0.0) + 0.0, hi - pad)


class PhiSpec:
    """A defining function with exact partials, closed under jet evaluation."""

    def __init__(self, name: str, expr: Callable, domain: PhiDomain, params: dict | None = None,
                 formula: str = ""):
        self.name = name
        self._expr = expr
        self.domain = domain
        self.params = dict(params or {})
        self.formula = formula

    def __call__(self, b2, s):
        """Evaluate phi at floats or jets; domain errors carry (b^2, s)."""
        b2v, sv = value(b2), value(s)
        if not (self.domain.b2_lo <= b2v < self.domain.b2_hi):
            raise PhiDomainError(
                f"{self.name}: b^2 = {b2v:.6g} outside [{self.domain.b2_lo:.6g}, "
                f"{self.domain.b2_hi:.6g}) at s = {sv:.6g}"
            )
        try:
            return self._expr(b2, s)
        except JetDomainError as e:
            raise PhiDomainError(
                f"{self.name}: {e.args[0]} at (b^2, s) = ({b2v:.6g}, {sv:.6g})"
            ) from e

    def value(self, b2: float, s: float) -> float:
        return value(self(float(b2), float(s)))

    def phijet(self, b2: float, s: float) -> PhiJet:
        """phi with exact partials to order 2, by seeding (b^2, s)."""
        U, V = seed([float(b2), float(s)], {0, 1}, 2)
        out = self(U, V)
        if not isinstance(out, Jet):
            v = float(out)
            return PhiJet(v, 0.0, 0.0, 0.0, 0.0, 0.0)
        return PhiJet(
            phi=extract(out, (0, 0)),
            phi1=extract(out, (1, 0)),
            phi2=extract(out, (0, 1)),
            phi11=extract(out, (2, 0)),
            phi12=extract(out, (1, 1)),
            phi22=extract(out, (0, 2)),
        )

    def __repr__(self):
        ps = ", ".join(f"{k}={v}" for k, v in self.params.items() if not callable(v))
        return f"PhiSpec({self.name}{'[' + ps + ']' if ps else ''})"


# ---------------------------------------------------------------------------
# closed-form families
# ---------------------------------------------------------------------------

def constant_phi(c: float = 1.0) -> PhiSpec:
    """phi = c: the metric F = c * alpha is Riemannian."""

    def expr(b2, s):
        return c + 0.0 * b2 + 0.0 * s

    return PhiSpec("constant", expr, PhiDomain(0.0, math.inf), {"c": c}, formula=f"phi = {c}")


def randers_phi() -> PhiSpec:
    """phi = (sqrt(1 - b^2 + s^2) + s)/(1 - b^2), defined for b^2 < 1."""

    def expr(b2, s):
        root = jets.sqrt(1.0 - b2 + s * s)
        return (root + s) / (1.0 - b2)

    return PhiSpec(
        "randers", expr, _shrunk(0.0, 1.0),
        formula="phi = (sqrt(1-b^2+s^2) + s)/(1-b^2)",
    )


def square_phi() -> PhiSpec:
    """phi = (sqrt(1-b^2+s^2) + s)^2 / ((1-b^2)^2 sqrt(1-b^2+s^2)), b^2 < 1."""

    def expr(b2, s):
        root = jets.sqrt(1.0 - b2 + s * s)
        num = (root + s) * (root + s)
        den = (1.0 - b2) * (1.0 - b2) * root
        return num / den

    return PhiSpec(
        "square", expr, _shrunk(0.0, 1.0),
        formula="phi = (sqrt(1-b^2+s^2)+s)^2/((1-b^2)^2 sqrt(1-b^2+s^2))",
    )


# ---------------------------------------------------------------------------
# the projective-type ODE and its phi(b^2, s) lift
# ---------------------------------------------------------------------------

class OdeCurve:
    """Numerically integrated profile of the projective-type ODE.

    Jet arguments are handled by rebuilding the local Taylor series from the
    ODE recurrence at the base point (dense output supplies the 0th and 1st
    coefficients), so derivatives of any order up to the jet order are
    solver-accurate rather than finite-differenced.
    """

    def __init__(self, k1, k2, k3, init, s_max, _sols):
        self.k1, self.k2, self.k3 = k1, k2, k3
        self.init = tuple(init)
        self.s_max = s_max
        self._right, self._left = _sols

    def _pair(self, t: float) -> tuple[float, float]:
        if abs(t) > self.s_max:
            raise PhiDomainError(f"ODE profile evaluated at {t:.6g}, beyond +-{self.s_max}")
        sol = self._right if t >= 0 else self._left
        v = sol.sol(t)
        return float(v[0]), float(v[1])

    def _series(self, t0: float, order: int) -> np.ndarray:
        c = np.zeros(order + 1)
        v0, v1 = self._pair(t0)
        c[0] = v0
        if order == 0:
            return c
        c[1] = v1
        k1, k2, k3 = self.k1, self.k2, self.k3
        # series of A = (k1 + k2 t^2) / (1 + (k1+k3) t^2 + k2 t^4) at t0
        A = jets.univariate_series(
            lambda t: (k1 + k2 * t * t) / (1.0 + (k1 + k3) * t * t + k2 * t ** 4),
            t0, max(order - 2, 0),
        )
        # phibar'' = A * B with B = phibar - t phibar';  B_j = (1-j) c_j - t0 (j+1) c_{j+1}
        for j in range(0, order - 1):
            acc = 0.0
            for i in range(0, j + 1):
                Bi = (1 - (j - i)) * c[j - i] - t0 * ((j - i) + 1) * c[j - i + 1]
                acc += A[i] * Bi
            c[j + 2] = acc / ((j + 2) * (j + 1))
        return c

    def __call__(self, z):
        if isinstance(z, Jet):
            c = self._series(z.value, z.order)
            return jets.compose_series(c, z, z.value)
        return self._pair(float(z))[0]

    def deriv(self, t: float) -> float:
        return self._pair(float(t))[1]


def ode_ft_solve(k1: float, k2: float, k3: float, init: tuple[float, float],
                 s_max: float = 1.2) -> OdeCurve:
    """Integrate the projective-type profile ODE

        {1 + (k1+k3) t^2 + k2 t^4} phibar'' = (k1 + k2 t^2)(phibar - t phibar')

    two-sidedly on [-s_max, s_max] with dense output.  The leading
    coefficient must not vanish on the interval (reported with the crossing
    location otherwise), and the integrated profile is spot-checked to
    satisfy the ODE to 1e-9.
    """
    k1, k2, k3 = float(k1), float(k2), float(k3)

    def lead(t):
        return 1.0 + (k1 + k3) * t * t + k2 * t ** 4

    tgrid = np.linspace(0.0, s_max, 201)
    vals = np.array([lead(t) for t in tgrid])
    if vals[0] == 0.0 or np.any(np.sign(vals) != np.sign(vals[0])):
        idx = int(np.argmax(np.sign(vals) != np.sign(vals[0])))
        t_cross = optimize.brentq(lead, tgrid[idx - 1], tgrid[idx])
        raise PhiDomainError(
            f"leading coefficient vanishes at |s| = {t_cross:.8g}; "
            "shrink s_max below the singular point"
        )

    def rhs(t, yv):
        return [yv[1], (k1 + k2 * t * t) * (yv[0] - t * yv[1]) / lead(t)]

    opts = dict(dense_output=True, rtol=1e-12, atol=1e-14, method="DOP853")
    right = integrate.solve_ivp(rhs, [0.0, s_max], list(init), **opts)
    left = integrate.solve_ivp(rhs, [0.0, -s_max], list(init), **opts)
    if not (right.success and left.success):
        raise PhiDomainError("profile ODE integration failed")
    curve = OdeCurve(k1, k2, k3, init, s_max, (right, left))

    # residual spot-check with an independent derivative estimate: Richardson
    # differences of the dense phibar' against the ODE right-hand side
    worst = 0.0
    for t0 in np.linspace(-0.9 * s_max, 0.9 * s_max, 21):
        h = 1e-4
        d1 = (curve.deriv(t0 + h) - curve.deriv(t0 - h)) / (2 * h)
        d2 = (curve.deriv(t0 + h / 2) - curve.deriv(t0 - h / 2)) / h
        second = (4 * d2 - d1) / 3.0
        res = lead(t0) * second - (k1 + k2 * t0 * t0) * (curve(t0) - t0 * curve.deriv(t0))
        worst = max(worst, abs(res))
    if worst > 1e-9:
        raise PhiDomainError(f"integrated profile violates its ODE: residual {worst:.3e}")
    return curve


class _Eta:
    """Normalization factor: eta' + (k3 + k2 u) / (2 D(u)) eta = 0, eta(0) = scale.

    Closed form when k2 = 0; otherwise the log-integral is evaluated by
    adaptive quadrature (rel. tol. 1e-10) and jet arguments use the series of
    the defining linear ODE at the base point.
    """

    def __init__(self, k1, k2, k3, scale=1.0):
        self.k1, self.k2, self.k3 = k1, k2, k3
        self.scale = scale
        self._cache: dict[float, float] = {}

    def _w(self, u):
        k1, k2, k3 = self.k1, self.k2, self.k3
        return -(k3 + k2 * u) / (2.0 * (1.0 + (k1 + k3) * u + k2 * u * u))

    def _value(self, u0: float) -> float:
        got = self._cache.get(u0)
        if got is None:
            val, err = integrate.quad(self._w, 0.0, u0, epsrel=1e-10, epsabs=1e-14, limit=200)
            got = self.scale * math.exp(val)
            self._cache[u0] = got
        return got

    def __call__(self, u):
        k1, k2, k3 = self.k1, self.k2, self.k3
        if k2 == 0.0:
            if k1 + k3 == 0.0:
                return self.scale * jets.exp(-0.5 * k3 * u)
            p = -k3 / (2.0 * (k1 + k3))
            return self.scale * jets.power(1.0 + (k1 + k3) * u, p)
        if not isinstance(u, Jet):
            return self._value(float(u))
        u0 = u.value
        w = jets.univariate_series(self._w, u0, max(u.order - 1, 0))
        c = np.zeros(u.order + 1)
        c[0] = self._value(u0)
        for k in range(u.order):
            c[k + 1] = sum(w[i] * c[k - i] for i in range(k + 1)) / (k + 1)
        return jets.compose_series(c, u, u0)


def projflat_family(k1: float, k2: float, k3: float, phibar: Callable,
                    scale: float = 1.0, b2_max: float | None = None) -> PhiSpec:
    """Lift a 1-d profile phibar to phi(b^2, s) = eta(b^2) rho phibar(nu/rho) with

        rho = sqrt(1 - (k1+k3+k2 b^2) s^2 / D(b^2)),  nu = s / sqrt(D(b^2)),
        D(u) = 1 + (k1+k3) u + k2 u^2.

    ``phibar`` must solve the matching profile ODE (spot-checked at a few
    points); ``scale`` multiplies the normalization eta, whose default is
    eta(0) = 1.
    """
    k1, k2, k3 = float(k1), float(k2), float(k3)

    def lead_b2(u):
        return 1.0 + (k1 + k3) * u + k2 * u * u

    # phibar must satisfy its ODE; check with order-2 univariate jets
    for t0 in (0.0, 0.15, -0.2):
        (tj,) = seed([t0], {0}, 2)
        pj = phibar(tj)
        if not isinstance(pj, Jet):
            raise PhiDomainError("phibar must be evaluable on jets")
        p0, p1, p2 = extract(pj, (0,)), extract(pj, (1,)), extract(pj, (2,))
        res = (1.0 + (k1 + k3) * t0 * t0 + k2 * t0 ** 4) * p2 - (k1 + k2 * t0 * t0) * (
            p0 - t0 * p1
        )
        if abs(res) > 1e-7 * (1.0 + abs(p2)):
            raise PhiDomainError(
                f"phibar does not satisfy the profile ODE at {t0}: residual {res:.3e}"
            )

    # maximal b^2 so that D(b^2) > 0 and rho^2 > 0 up to s^2 = b^2
    hi = 4.0 if b2_max is None else b2_max
    for cond in (lead_b2, lambda u: lead_b2(u) - (k1 + k3 + k2 * u) * u):
        grid = np.linspace(0.0, hi, 400)
        vals = np.array([cond(u) for u in grid])
        bad = np.nonzero(vals <= 0.0)[0]
        if bad.size:
            root = optimize.brentq(cond, grid[bad[0] - 1], grid[bad[0]])
            hi = min(hi, root)

    eta = _Eta(k1, k2, k3, scale=scale)

    def expr(b2, s):
        Dv = 1.0 + (k1 + k3) * b2 + k2 * b2 * b2
        rho = jets.sqrt(1.0 - (k1 + k3 + k2 * b2) * s * s / Dv)
        nu = s / jets.sqrt(Dv)
        return eta(b2) * rho * phibar(nu / rho)

    return PhiSpec(
        "projflat", expr, _shrunk(0.0, hi),
        params={"k1": k1, "k2": k2, "k3": k3, "scale": scale},
        formula="phi = eta(b^2) rho phibar(nu/rho)",
    )


# ---------------------------------------------------------------------------
# Einstein solution families (sigma, C, D)
# ---------------------------------------------------------------------------

def _auto_sign(candidates, expr_builder, b2_mid):
    """First sign choice positive across probes spanning the domain.

    A simple pole inside the region flips the sign across it, so probing the
    center plus near-edge fiber points rejects branches with interior or
    edge-of-closure poles, not just ones negative at the center.
    """
    probes = [(b2_mid, 0.0)]
    for b2p in (0.35 * b2_mid, 1.92 * b2_mid):
        bp = math.sqrt(b2p)
        probes += [(b2p, 0.9 * bp), (b2p, -0.9 * bp)]
    best = None
    for signs in candidates:
        expr = expr_builder(signs)
        try:
            vals = [value(expr(b2p, sp)) for b2p, sp in probes]
        except (JetDomainError, ZeroDivisionError, ValueError):
            continue
        if all(v > 0.0 for v in vals):
            return signs
        if best is None and vals[0] > 0.0:
            best = signs
    if best is not None:
        return best
    raise PhiDomainError("no sign choice yields a positive phi on this domain")


def solution_family(sigma: float, C: float, D: float = 0.0, branch: str = "auto",
                    signs: tuple | None = None, b2_max: float | None = None) -> PhiSpec:
    """Einstein defining-function families parameterized by (sigma, C, D).

    Branches:

    * ``"sol03"``  phi = 1/(2 sqrt(-sigma)) * 1/(e1 sqrt(C - b^2 + s^2) + e2 s)
    * ``"i"``      D = 0 (Riemannian): phi = e1 sqrt(-(C - b^2 + s^2)/sigma)/(C - b^2)
    * ``"ii"``     sigma = 0 (Berwald): phi = D/(sqrt(C-b^2+s^2)(sqrt(C-b^2+s^2) + e1 s)^2)
    * ``"iii"``    sigma < 0: difference of two sol03-type terms with shifted C
    * ``"iv"``     sigma > 0: real/imaginary decomposition of the complex root
                   form (principal square root)
    * ``"quartic"`` the q-root form phi = q/(q^2 (D q + s)^2 + sigma) with q
                   from D^2 q^4 + (u - C) q^2 - sigma = 0, u = b^2 - s^2

    ``signs`` selects root/sign branches explicitly; by default the choice
    making phi positive at (midpoint, 0) is used.  The declared b^2-interval
    keeps every radicand positive for all |s| <= b.
    """
    sigma, C, D = float(sigma), float(C), float(D)
    if branch == "auto":
        if D == 0.0 and sigma < 0.0:
            branch = "i"
        elif sigma == 0.0:
            branch = "ii"
        elif sigma < 0.0:
            branch = "iii"
        else:
            branch = "iv"

    params = {"sigma": sigma, "C": C, "D": D, "branch": branch}

    if branch == "sol03":
        if sigma >= 0.0:
            raise PhiDomainError("sol03 branch needs sigma < 0")
        hi = C
        pref = 1.0 / (2.0 * math.sqrt(-sigma))

        def build(sg):
            e1, e2 = sg

            def expr(b2, s):
                return pref / (e1 * jets.sqrt(C - b2 + s * s) + e2 * s)

            return expr

        cands = [(1, 1), (1, -1), (-1, 1), (-1, -1)] if signs is None else [tuple(signs)]
        sg = _auto_sign(cands, build, min(hi, 1.0) / 2) if signs is None else tuple(signs)
        expr = build(sg)
        params["signs"] = sg
        formula = "phi = 1/(2 sqrt(-sigma) (e1 sqrt(C-b^2+s^2) + e2 s))"

    elif branch == "i":
        if sigma >= 0.0:
            raise PhiDomainError("branch i needs sigma < 0 for a real root")
        hi = C

        def build(sg):
            (e1,) = sg

            def expr(b2, s):
                return e1 * jets.sqrt(-(C - b2 + s * s) / sigma) / (C - b2)

            return expr

        sg = _auto_sign([(1,), (-1,)], build, min(hi, 1.0) / 2) if signs is None else tuple(signs)
        expr = build(sg)
        params["signs"] = sg
        formula = "phi = e1 sqrt(-(C-b^2+s^2)/sigma)/(C-b^2)   [Riemannian]"

    elif branch == "ii":
        if sigma != 0.0:
            raise PhiDomainError("branch ii needs sigma = 0")
        if D == 0.0:
            raise PhiDomainError("branch ii needs D != 0")
        hi = C

        def build(sg):
            (e1,) = sg

            def expr(b2, s):
                root = jets.sqrt(C - b2 + s * s)
                den = root + e1 * s
                return D / (root * den * den)

            return expr

        sg = _auto_sign([(1,), (-1,)], build, min(hi, 1.0) / 2) if signs is None else tuple(signs)
        expr = build(sg)
        params["signs"] = sg
        formula = "phi = D/(sqrt(C-b^2+s^2)(sqrt(C-b^2+s^2) + e1 s)^2)   [Berwald]"

    elif branch == "iii":
        if sigma >= 0.0 or D == 0.0:
            raise PhiDomainError("branch iii needs sigma < 0 and D != 0")
        shift = 2.0 * math.sqrt(-sigma) * abs(D)
        hi = C - shift
        if hi <= 0.0:
            raise PhiDomainError(f"empty domain: C - 2 sqrt(-sigma)|D| = {hi:.6g} <= 0")
        pref = 1.0 / (2.0 * math.sqrt(-sigma))
        shift_signed = 2.0 * math.sqrt(-sigma) * D

        def build(sg):
            e1, e2 = sg

            def expr(b2, s):
                t1 = e1 * jets.sqrt(C + shift_signed - b2 + s * s) - s
                t2 = e2 * jets.sqrt(C - shift_signed - b2 + s * s) - s
                return pref * (1.0 / t1 - 1.0 / t2)

            return expr

        cands = [(1, -1), (-1, 1), (1, 1), (-1, -1)] if signs is None else [tuple(signs)]
        sg = _auto_sign(cands, build, hi / 2) if signs is None else tuple(signs)
        expr = build(sg)
        params["signs"] = sg
        formula = (
            "phi = (1/(2 sqrt(-sigma)))(1/(e1 sqrt(C+2 sqrt(-sigma)D-b^2+s^2)-s)"
            " - 1/(e2 sqrt(C-2 sqrt(-sigma)D-b^2+s^2)-s))"
        )

    elif branch == "iv":
        if sigma <= 0.0 or D == 0.0:
            raise PhiDomainError("branch iv needs sigma > 0 and D != 0")
        hi = C if C > 0 else 1.0
        Y = 2.0 * math.sqrt(sigma) * D
        pref = 1.0 / math.sqrt(sigma)

        def build(sg):
            (e1,) = sg

            def expr(b2, s):
                # principal sqrt(X + iY) = pp + i qq, then the imaginary part
                # of 1/(e1(pp + i qq) + s); equal to the quartic q-root form
                X = C - b2 + s * s
                mod = jets.sqrt(X * X + Y * Y)
                pp = jets.sqrt((mod + X) / 2.0)
                qq = math.copysign(1.0, Y) * jets.sqrt((mod - X) / 2.0)
                A = e1 * pp + s
                B = e1 * qq
                return pref * B / (A * A + B * B)

            return expr

        sg = _auto_sign([(1,), (-1,)], build, min(hi, 1.0) / 2) if signs is None else tuple(signs)
        expr = build(sg)
        params["signs"] = sg
        formula = "phi = (1/sqrt(sigma)) Im[1/(e1 sqrt(C - (b^2-s^2) + 2i sqrt(sigma) D) + s)]"

    elif branch == "quartic":
        if D == 0.0:
            raise PhiDomainError("the quartic branch needs D != 0 (use branch i instead)")
        if sigma < 0.0:
            hi = C - 2.0 * abs(D) * math.sqrt(-sigma)
            if hi <= 0.0:
                raise PhiDomainError("empty domain for the quartic branch")
        else:
            hi = C if C > 0 else 1.0

        def build(sg):
            root_sel, qsign = sg

            def expr(b2, s):
                u = b2 - s * s
                disc = jets.sqrt((u - C) * (u - C) + 4.0 * D * D * sigma)
                plus = (-(u - C) + disc) / (2.0 * D * D)
                if root_sel > 0:
                    q2 = plus
                else:
                    # minus root by the product of roots: avoids the
                    # catastrophic cancellation -(u-C) - disc as D -> 0
                    q2 = -sigma / (D * D * plus)
                if value(q2) <= 0.0:
                    raise JetDomainError("no positive q^2 root at this point", value(q2))
                q = qsign * jets.sqrt(q2)
                den = q * q * (D * q + s) * (D * q + s) + sigma
                return q / den

            return expr

        # default root: continuous with the D -> 0 limit (the finite root)
        cands = (
            [(-1, 1), (-1, -1), (1, 1), (1, -1)] if sigma < 0.0 else [(1, 1), (1, -1)]
        )
        sg = _auto_sign(cands, build, hi / 2) if signs is None else tuple(signs)
        expr = build(sg)
        params["signs"] = sg
        formula = "phi = q/(q^2 (D q + s)^2 + sigma),  D^2 q^4 + (u-C) q^2 - sigma = 0"

    else:
        raise PhiDomainError(f"unknown solution branch {branch!r}")

    if b2_max is not None:
        hi = min(hi, b2_max)
    return PhiSpec(f"solution-{branch}", expr, _shrunk(0.0, hi), params, formula=formula)


def quartic_root_residual(phi: PhiSpec, b2: float, s: float) -> float:
    """D^2 q^4 + (u - C) q^2 - sigma for the q used by a quartic-branch spec."""
    if phi.params.get("branch") != "quartic":
        raise PhiDomainError("root residual only defined for the quartic branch")
    sigma, C, D = phi.params["sigma"], phi.params["C"], phi.params["D"]
    root_sel, _ = phi.params["signs"]
    u = b2 - s * s
    disc = math.sqrt((u - C) ** 2 + 4.0 * D * D * sigma)
    plus = (-(u - C) + disc) / (2.0 * D * D)
    q2 = plus if root_sel > 0 else -sigma / (D * D * plus)
    return D * D * q2 * q2 + (u - C) * q2 - sigma


# ---------------------------------------------------------------------------
# the Ricci-flat Berwald family and utilities
# ---------------------------------------------------------------------------

def berwald_family(phibar: Callable, b2_lo: float = 1e-2, b2_hi: float = 9.0) -> PhiSpec:
    """phi(b^2, s) = phibar(s/b)/b for a positive twice-differentiable profile.

    Needs b^2 > 0; the profile is evaluated on |s/b| <= 1.
    """
    if value(phibar(0.0)) <= 0.0:
        raise PhiDomainError("phibar must be positive")

    def expr(b2, s):
        b = jets.sqrt(b2)
        return phibar(s / b) / b

    dom = PhiDomain(float(b2_lo), float(b2_hi))
    return PhiSpec("berwald", expr, dom, {"b2_lo": b2_lo, "b2_hi": b2_hi},
                   formula="phi = phibar(s/b)/b")


def with_s3_perturbation(phi: PhiSpec, eps: float) -> PhiSpec:
    """phi + eps * s^3: breaks the defining PDEs linearly in eps (falsifiability)."""

    def expr(b2, s):
        return phi._expr(b2, s) + eps * s * s * s

    return PhiSpec(
        f"{phi.name}+eps*s^3", expr, phi.domain,
        {**phi.params, "eps": eps}, formula=phi.formula + f" + {eps}*s^3",
    )


# ---------------------------------------------------------------------------
# regularity
# ---------------------------------------------------------------------------

@dataclass
class RegularityResult:
    """Outcome of the pointwise strong-convexity inequalities on a grid.

    Checks phi - s phi2 > 0 and phi - s phi2 + (b^2 - s^2) phi22 > 0; on
    failure ``witness`` holds (b^2, s, first value, second value).
    """

    passed: bool
    checked: int
    min_first: float
    min_second: float
    witness: tuple | None = None


def regularity_check(phi: PhiSpec, grid=None, nb: int = 21, ns: int = 21,
                     b2_max: float | None = None) -> RegularityResult:
    if grid is None:
        grid = phi.domain.grid(nb, ns, b2_max=b2_max)
    wit = None
    m1 = m2 = float("inf")
    for b2, s in grid:
        pj = phi.phijet(b2, s)
        first = pj.phi - s * pj.phi2
        second = first + (b2 - s * s) * pj.phi22
        m1, m2 = min(m1, first), min(m2, second)
        if (first <= 0.0 or second <= 0.0) and wit is None:
            wit = (b2, s, first, second)
    return RegularityResult(wit is None, len(grid), m1, m2, wit)
