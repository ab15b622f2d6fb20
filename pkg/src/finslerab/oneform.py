"""One-forms beta = b_i(x) y^i, their covariant derivatives and contractions.

A :class:`OneFormField` is bound to a :class:`~finslerab.riemann.MetricField`
for norms and covariant derivatives.  From b_{i|j} this module derives the
full list of contracted quantities used by the spray formula,

    r_ij = (b_{i|j} + b_{j|i})/2,   s_ij = (b_{i|j} - b_{j|i})/2,
    r_00 = r_ij y^i y^j,  s^i_0 = a^ij s_jk y^k,  r_i = b^j r_ji,
    s_i = b^j s_ji,  r_0 = r_i y^i,  s_0 = s_i y^i,
    r^i = a^ij r_j,  s^i = a^ij s_j,  r = b^i r_i,

and provides the two structural checks used throughout: conformality
(b_{i|j} = c a_ij, with c extracted by trace averaging) and constancy of
c^2 + mu b^2 across sample points.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import jets
from .jets import Jet, seed, value
from .riemann import GeometryError, MetricField, christoffel

__all__ = [
    "OneFormField",
    "BetaDerived",
    "ConformalResult",
    "HomothetyResult",
    "PreconditionError",
    "linear_form",
    "constant_form",
    "warped_dt_form",
    "explicit_form",
    "covariant_derivative",
    "beta_quantities",
    "conformal_check",
    "lemma21_check",
]


class PreconditionError(ValueError):
    """An operation was invoked on inputs violating its stated precondition."""


class OneFormField:
    """A 1-form b_i(x) on the chart of a bound metric, jet-evaluable."""

    def __init__(self, metric: MetricField, components: Callable, label: str = "explicit"):
        self.metric = metric
        self._components = components
        self.label = label

    @property
    def dim(self) -> int:
        return self.metric.dim

    def components_at(self, X: Sequence) -> list:
        return self._components(list(X))

    def covector(self, x: Sequence[float]) -> np.ndarray:
        return np.array([value(c) for c in self.components_at([float(v) for v in x])])

    def beta(self, x, y):
        """b_i(x) y^i for floats or jets."""
        b = self.components_at(x)
        return sum(b[i] * y[i] for i in range(self.dim))

    def b2(self, x: Sequence[float]) -> float:
        """Squared norm a^ij b_i b_j (>= 0)."""
        b = self.covector(x)
        inv = self.metric.inverse(x)
        return float(b @ inv @ b)

    def b2_at(self, X: Sequence):
        """Squared norm with jets flowing through the metric inverse."""
        A = self.metric.matrix_at(X)
        b = self.components_at(X)
        binv = jets.solve_linear(A, list(b))
        return sum(binv[i] * b[i] for i in range(self.dim))

    def __repr__(self):
        return f"OneFormField(dim={self.dim}, label={self.label!r})"


# ---------------------------------------------------------------------------
# constructors
# ---------------------------------------------------------------------------

def linear_form(metric: MetricField, coef: float) -> OneFormField:
    """beta = coef * sum_i x^i dx^i (conformal on flat space with c = coef)."""

    def comps(X):
        return [coef * xi for xi in X]

    return OneFormField(metric, comps, label=f"linear({coef})")


def constant_form(metric: MetricField, vec: Sequence[float]) -> OneFormField:
    v = [float(c) for c in vec]

    def comps(X):
        zero = 0.0 * X[0]
        return [vi + zero for vi in v]

    return OneFormField(metric, comps, label="constant")


def warped_dt_form(metric: MetricField) -> OneFormField:
    """beta = h(t) dt on a warped-product backend (the canonical pairing)."""
    if metric.backend != "warped-product":
        raise GeometryError("warped_dt_form needs a warped-product metric")
    h = metric.meta["h"]

    def comps(X):
        t = X[0]
        zero = 0.0 * t
        return [h(t)] + [zero] * (metric.dim - 1)

    return OneFormField(metric, comps, label="h(t)dt")


def explicit_form(metric: MetricField, fn: Callable, label: str = "explicit") -> OneFormField:
    return OneFormField(metric, fn, label=label)


# ---------------------------------------------------------------------------
# covariant derivative and derived quantities
# ---------------------------------------------------------------------------

def covariant_derivative(beta: OneFormField, x: Sequence[float]) -> np.ndarray:
    """b_{i|j} = db_i/dx^j - Gamma^k_ij b_k at x."""
    n = beta.dim
    X = seed([float(v) for v in x], range(n), 1)
    comps = beta.components_at(X)
    db = np.zeros((n, n))
    bv = np.zeros(n)
    for i in range(n):
        ci = comps[i]
        if isinstance(ci, Jet):
            bv[i] = ci.value
            db[i, :] = ci.c[1:]
        else:
            bv[i] = float(ci)
    Gam = christoffel(beta.metric, x)
    return db - np.einsum("kij,k->ij", Gam, bv)


@dataclass
class BetaDerived:
    """All contracted covariant-derivative quantities of beta at one (x, y)."""

    b2: float
    beta: float
    rij: np.ndarray   # symmetric part of b_{i|j}
    sij: np.ndarray   # antisymmetric part
    r00: float
    si0: np.ndarray   # s^i_0 = a^ij s_jk y^k
    ri: np.ndarray    # r_i = b^j r_ji
    si: np.ndarray    # s_i = b^j s_ji
    r0: float
    s0: float
    r_up: np.ndarray  # r^i = a^ij r_j
    s_up: np.ndarray  # s^i
    r: float


def beta_quantities(beta: OneFormField, x: Sequence[float], y: Sequence[float]) -> BetaDerived:
    y = np.asarray(y, dtype=float)
    bij = covariant_derivative(beta, x)
    rij = 0.5 * (bij + bij.T)
    sij = 0.5 * (bij - bij.T)
    inv = beta.metric.inverse(x)
    b = beta.covector(x)
    b_up = inv @ b
    ri = b_up @ rij      # r_i = b^j r_ji
    si = b_up @ sij
    return BetaDerived(
        b2=float(b @ b_up),
        beta=float(b @ y),
        rij=rij,
        sij=sij,
        r00=float(y @ rij @ y),
        si0=inv @ (sij @ y),
        ri=ri,
        si=si,
        r0=float(ri @ y),
        s0=float(si @ y),
        r_up=inv @ ri,
        s_up=inv @ si,
        r=float(b_up @ ri),
    )


# ---------------------------------------------------------------------------
# conformality and constancy checks
# ---------------------------------------------------------------------------

@dataclass
class ConformalResult:
    """Per-sample conformal factor and the worst deviation from b_{i|j} = c a_ij."""

    c_values: list[float]
    residual: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.residual < self.tolerance


def conformal_check(
    beta: OneFormField, xs: Sequence[Sequence[float]], tol: float = 1e-8
) -> ConformalResult:
    """Extract c(x) := trace(a^ij b_{i|j})/n per sample and measure the defect.

    The residual is max over samples of the largest entry of
    a^-1/2 (b_{i|j} - c a_ij) a^-1/2 in absolute value (metric-normalized, so
    the tolerance is chart-scale free).
    """
    if len(xs) == 0:
        raise PreconditionError("conformal_check needs a nonempty sample set")
    cs = []
    worst = 0.0
    for x in xs:
        bij = covariant_derivative(beta, x)
        A = beta.metric.matrix(x)
        inv = np.linalg.inv(A)
        c = float(np.trace(inv @ bij)) / beta.dim
        cs.append(c)
        # congruence by the inverse Cholesky factor normalizes by the metric
        L = np.linalg.cholesky(A)
        Linv = np.linalg.inv(L)
        dev = Linv @ (bij - c * A) @ Linv.T
        worst = max(worst, float(np.max(np.abs(dev))))
    return ConformalResult(cs, worst, tol)


@dataclass
class HomothetyResult:
    """kappa(x) := c(x)^2 + mu b^2(x) per sample and its spread."""

    kappa_values: list[float]
    spread: float
    tolerance: float

    @property
    def kappa(self) -> float:
        return float(np.mean(self.kappa_values))

    @property
    def passed(self) -> bool:
        return self.spread < self.tolerance


def lemma21_check(
    beta: OneFormField,
    mu: float,
    xs: Sequence[Sequence[float]],
    tol: float = 1e-10,
    conformal_tol: float = 1e-8,
) -> HomothetyResult:
    """Constancy of kappa := c^2 + mu b^2 across samples.

    Precondition: the same samples pass conformal_check; violating it raises
    :class:`PreconditionError` instead of returning a meaningless spread.
    """
    conf = conformal_check(beta, xs, tol=conformal_tol)
    if not conf.passed:
        raise PreconditionError(
            f"lemma21_check requires a conformal one-form; residual {conf.residual:.3e} "
            f"exceeds {conf.tolerance:.3e}"
        )
    kappas = [c * c + mu * beta.b2(x) for c, x in zip(conf.c_values, xs)]
    spread = float(max(kappas) - min(kappas))
    return HomothetyResult(kappas, spread, tol)
