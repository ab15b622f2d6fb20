"""Residual evaluators for the defining PDE system of phi(b^2, s).

The two equations verified throughout the package are

    (I)   phi_22 - 2 (phi_1 - s phi_12) = 0
    (II)  (kappa - mu b^2) [psi^2 - (psi_2 + 2 s psi_1)] + mu s psi + mu
          = K phi^2,      psi := (phi_2 + 2 s phi_1) / (2 phi)

together with their image under the change of variables u = b^2 - s^2,
v = s:

    (I')  phi_vv - 2 v phi_uv - 4 phi_u = 0
    (II') kappa (1/sqrt(phi))_vv - K (1/sqrt(phi))^(-3) = 0    (mu = 0 form)

Residuals are reported raw (not normalized): the equations are exact
identities, so the unnormalized defect is the honest primitive.  Callers
that need scale-free pass/fail divide by max(1, |K phi^2|).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import jets
from .jets import Jet, extract, seed, value
from .phi import PhiDomainError, PhiJet, PhiSpec

__all__ = [
    "PsiValue",
    "pde1_residual",
    "psi_jet",
    "pde2_residual",
    "pde2_normalized_residual",
    "uv_residuals",
    "UVResiduals",
    "grid_max_residual",
]


def pde1_residual(phi: PhiSpec, b2: float, s: float) -> float:
    """phi_22 - 2 (phi_1 - s phi_12) from the exact order-2 record."""
    pj = phi.phijet(b2, s)
    return pj.phi22 - 2.0 * (pj.phi1 - s * pj.phi12)


@dataclass(frozen=True)
class PsiValue:
    """psi = (phi_2 + 2 s phi_1)/(2 phi) with its first partials.

    Slot 1 differentiates in b^2, slot 2 in s, matching :class:`PhiJet`.
    """

    psi: float
    psi1: float
    psi2: float


def psi_jet(phi: PhiSpec, b2: float, s: float) -> PsiValue:
    """psi and its partials by order-1 jet arithmetic over the PhiJet record.

    The quotient rule is never written out: phi, phi_1 and phi_2 are loaded
    as jets carrying their own first partials and the defining expression is
    evaluated in the 2-variable order-1 ring.
    """
    pj = phi.phijet(b2, s)
    if pj.phi <= 0.0:
        raise PhiDomainError(f"psi needs phi > 0, got {pj.phi:.6g} at ({b2:.6g}, {s:.6g})")
    r = jets.ring(2, 1)

    def as_jet(v, d1, d2):
        return Jet(r, np.array([v, d1, d2]))

    phi_j = as_jet(pj.phi, pj.phi1, pj.phi2)
    phi1_j = as_jet(pj.phi1, pj.phi11, pj.phi12)
    phi2_j = as_jet(pj.phi2, pj.phi12, pj.phi22)
    s_j = as_jet(s, 0.0, 1.0)
    psi = (phi2_j + 2.0 * s_j * phi1_j) / (2.0 * phi_j)
    return PsiValue(extract(psi, (0, 0)), extract(psi, (1, 0)), extract(psi, (0, 1)))


def pde2_residual(phi: PhiSpec, mu: float, kappa: float, K: float, b2: float, s: float) -> float:
    """(kappa - mu b^2)[psi^2 - (psi_2 + 2 s psi_1)] + mu s psi + mu - K phi^2."""
    if kappa - mu * b2 <= 0.0:
        raise PhiDomainError(
            f"kappa - mu b^2 = {kappa - mu * b2:.6g} <= 0 at b^2 = {b2:.6g}"
        )
    ps = psi_jet(phi, b2, s)
    pj = phi.phijet(b2, s)
    lhs = (kappa - mu * b2) * (ps.psi ** 2 - (ps.psi2 + 2.0 * s * ps.psi1))
    lhs += mu * s * ps.psi + mu
    return lhs - K * pj.phi ** 2


def pde2_normalized_residual(phi: PhiSpec, kappa_bar: float, K: float, b2: float, s: float) -> float:
    """The mu = 0 specialization: kappa_bar [psi^2 - (psi_2 + 2 s psi_1)] - K phi^2."""
    return pde2_residual(phi, 0.0, kappa_bar, K, b2, s)


@dataclass(frozen=True)
class UVResiduals:
    """Residuals of the (u, v)-form equations at one point."""

    eqn_uv_transfer: float  # phi_vv - 2 v phi_uv - 4 phi_u  (image of (I))
    eqn_uv_curvature: float  # kappa (1/sqrt(phi))_vv - K (1/sqrt(phi))^-3


def uv_residuals(phi: PhiSpec, u: float, v: float, kappa: float, K: float) -> UVResiduals:
    """Evaluate both (u, v)-form residuals at u = b^2 - s^2, v = s.

    The transfer equation here equals the (b^2, s)-form residual of (I)
    exactly (chain rule: phi_vv - 2v phi_uv - 4 phi_u = phi_22 - 2(phi_1 -
    s phi_12), factor 1, sign +).  The curvature equation is (1/sqrt(phi))
    times the mu = 0 residual of (II).
    """
    U, V = seed([float(u), float(v)], {0, 1}, 2)
    b2 = U + V * V
    out = phi(b2, V)
    if not isinstance(out, Jet):
        out = jets.constant(float(out), U)
    p_u = extract(out, (1, 0))
    p_uv = extract(out, (1, 1))
    p_vv = extract(out, (0, 2))
    transfer = p_vv - 2.0 * v * p_uv - 4.0 * p_u

    w = 1.0 / jets.sqrt(out)
    w_vv = extract(w, (0, 2))
    curvature = kappa * w_vv - K * value(w) ** (-3)
    return UVResiduals(transfer, curvature)


def grid_max_residual(fn, grid) -> tuple[float, float]:
    """(max, mean) of |fn(b2, s)| over a grid of (b^2, s) nodes."""
    vals = np.array([abs(fn(b2, s)) for b2, s in grid])
    return float(vals.max()), float(vals.mean())
