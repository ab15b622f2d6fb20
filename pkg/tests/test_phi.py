"""Tests for the defining-function families phi(b^2, s)."""

import math

import numpy as np
import pytest

from finslerab.phi import (
    OdeCurve,
    PhiDomainError,
    berwald_family,
    constant_phi,
    ode_ft_solve,
    projflat_family,
    quartic_root_residual,
    randers_phi,
    regularity_check,
    solution_family,
    square_phi,
    with_s3_perturbation,
)
from finslerab import jets


def fd_phijet(phi, b2, s, h1=1e-6, h2=5e-4):
    """Central-difference oracle for the order-2 partial record.

    Second derivatives use a larger step: with h = 1e-6 the roundoff term
    eps/h^2 ~ 1e-4 would swamp the comparison.
    """
    f = phi.value
    return {
        "phi1": (f(b2 + h1, s) - f(b2 - h1, s)) / (2 * h1),
        "phi2": (f(b2, s + h1) - f(b2, s - h1)) / (2 * h1),
        "phi22": (f(b2, s + h2) - 2 * f(b2, s) + f(b2, s - h2)) / h2 ** 2,
        "phi11": (f(b2 + h2, s) - 2 * f(b2, s) + f(b2 - h2, s)) / h2 ** 2,
        "phi12": (
            f(b2 + h2, s + h2) - f(b2 + h2, s - h2) - f(b2 - h2, s + h2) + f(b2 - h2, s - h2)
        ) / (4 * h2 ** 2),
    }


# ---------------------------------------------------------------------------
# canonical closed forms
# ---------------------------------------------------------------------------

class TestCanonicalFamilies:
    def test_randers_values(self):
        phi = randers_phi()
        assert phi.value(0.0, 0.0) == pytest.approx(1.0, abs=1e-15)
        # frozen from the closed form at 30 digits
        assert phi.value(0.25, 0.1) == pytest.approx(1.2957063849441796139, rel=1e-14)

    def test_square_values(self):
        phi = square_phi()
        assert phi.value(0.0, 0.0) == pytest.approx(1.0, abs=1e-15)
        assert phi.value(0.25, 0.1) == pytest.approx(1.9257788007140671978, rel=1e-14)

    def test_randers_outside_domain(self):
        phi = randers_phi()
        with pytest.raises(PhiDomainError):
            phi.value(1.2, 0.1)

    @pytest.mark.parametrize("family", [randers_phi, square_phi])
    def test_partials_match_fd(self, family):
        phi = family()
        for b2, s in [(0.25, 0.1), (0.49, -0.3), (0.04, 0.15)]:
            pj = phi.phijet(b2, s)
            fd = fd_phijet(phi, b2, s)
            assert pj.phi1 == pytest.approx(fd["phi1"], rel=1e-6)
            assert pj.phi2 == pytest.approx(fd["phi2"], rel=1e-6)
            assert pj.phi11 == pytest.approx(fd["phi11"], rel=1e-4, abs=1e-6)
            assert pj.phi12 == pytest.approx(fd["phi12"], rel=1e-4, abs=1e-6)
            assert pj.phi22 == pytest.approx(fd["phi22"], rel=1e-4, abs=1e-6)

    def test_constant_phi(self):
        phi = constant_phi(2.5)
        pj = phi.phijet(0.3, 0.2)
        assert pj.phi == 2.5
        assert pj.phi1 == pj.phi2 == pj.phi22 == 0.0


# ---------------------------------------------------------------------------
# profile ODE
# ---------------------------------------------------------------------------

class TestOdeProfile:
    def test_linear_profile_forced(self):
        # k1 = k2 = 0 kills the right-hand side: phibar'' = 0
        # (leading coefficient 1 - t^2 vanishes at 1, so stay below)
        curve = ode_ft_solve(0.0, 0.0, -1.0, (1.0, 1.0), s_max=0.95)
        for t in (-0.8, -0.2, 0.0, 0.5, 0.9):
            assert curve(t) == pytest.approx(1.0 + t, abs=1e-12)

    def test_square_profile(self):
        curve = ode_ft_solve(2.0, 0.0, -3.0, (1.0, 2.0), s_max=0.95)
        for t in (-0.6, -0.1, 0.3, 0.8):
            assert curve(t) == pytest.approx((1.0 + t) ** 2, rel=1e-10)

    def test_jet_evaluation_derivatives(self):
        curve = ode_ft_solve(2.0, 0.0, -3.0, (1.0, 2.0), s_max=0.95)
        (t,) = jets.seed([0.4], {0}, 4)
        out = curve(t)
        assert jets.extract(out, (1,)) == pytest.approx(2.0 * 1.4, rel=1e-9)
        assert jets.extract(out, (2,)) == pytest.approx(2.0, rel=1e-8)
        assert abs(jets.extract(out, (3,))) < 1e-7
        assert abs(jets.extract(out, (4,))) < 1e-6

    def test_sqrt_profile_with_quartic_term(self):
        # phibar = sqrt(1 + k1 t^2) solves the ODE when k2 = k1 k3
        k1, k3 = 1.0, 0.5
        curve = ode_ft_solve(k1, k1 * k3, k3, (1.0, 0.0), s_max=1.0)
        for t in (-0.7, 0.2, 0.9):
            assert curve(t) == pytest.approx(math.sqrt(1.0 + k1 * t * t), rel=1e-10)

    def test_singular_leading_coefficient_reported(self):
        # 1 - 2 t^2 vanishes at t = 1/sqrt(2) < s_max
        with pytest.raises(PhiDomainError, match="leading coefficient"):
            ode_ft_solve(1.0, 0.0, -3.0, (1.0, 0.0), s_max=1.0)


# ---------------------------------------------------------------------------
# projectively-flat lifts
# ---------------------------------------------------------------------------

class TestProjflatFamily:
    def test_reproduces_randers(self):
        phi = projflat_family(0.0, 0.0, -1.0, lambda z: 1.0 + z)
        ref = randers_phi()
        for b2, s in [(0.2, 0.1), (0.5, -0.3), (0.81, 0.4), (0.04, 0.0)]:
            assert phi.value(b2, s) == pytest.approx(ref.value(b2, s), abs=1e-12)

    def test_reproduces_square(self):
        phi = projflat_family(2.0, 0.0, -3.0, lambda z: (1.0 + z) * (1.0 + z))
        ref = square_phi()
        for b2, s in [(0.2, 0.1), (0.5, -0.3), (0.64, 0.35)]:
            assert phi.value(b2, s) == pytest.approx(ref.value(b2, s), abs=1e-12)

    def test_ode_profile_spot_check_rejects_mismatch(self):
        # profile 1 + z does not satisfy the ODE with k1 = 2
        with pytest.raises(PhiDomainError, match="profile ODE"):
            projflat_family(2.0, 0.0, -3.0, lambda z: 1.0 + z)

    def test_eta_quadrature_branch(self):
        # k2 != 0 with the closed-form sqrt profile (k2 = k1 k3)
        k1, k3 = 1.0, 0.5
        phi = projflat_family(k1, k1 * k3, k3, lambda z: jets.sqrt(1.0 + k1 * z * z))
        v = phi.value(0.3, 0.2)
        assert v > 0.0
        pj = phi.phijet(0.3, 0.2)
        fd = fd_phijet(phi, 0.3, 0.2)
        assert pj.phi1 == pytest.approx(fd["phi1"], rel=1e-6)
        assert pj.phi22 == pytest.approx(fd["phi22"], rel=1e-4, abs=1e-6)

    def test_scale_multiplies(self):
        a = projflat_family(0.0, 0.0, -1.0, lambda z: 1.0 + z, scale=1.0)
        b = projflat_family(0.0, 0.0, -1.0, lambda z: 1.0 + z, scale=2.0)
        assert b.value(0.3, 0.1) == pytest.approx(2.0 * a.value(0.3, 0.1), rel=1e-14)


# ---------------------------------------------------------------------------
# Einstein solution families
# ---------------------------------------------------------------------------

class TestSolutionFamilies:
    def test_branch_i_closed_form(self):
        phi = solution_family(-1.0, 2.0, branch="i")
        assert phi.value(1.0, 0.5) == pytest.approx(1.1180339887498948482, rel=1e-14)

    def test_sol03_closed_form(self):
        phi = solution_family(-1.0, 2.0, branch="sol03", signs=(1, 1))
        assert phi.value(1.0, 0.0) == pytest.approx(0.5, rel=1e-14)

    def test_default_signs_give_positive_phi(self):
        for phi in [
            solution_family(-1.0, 2.0, branch="sol03"),
            solution_family(-0.25, 3.0, 0.5, branch="iii"),
            solution_family(1.0, 2.0, 0.5, branch="iv"),
            solution_family(0.0, 2.0, 1.0, branch="ii"),
            solution_family(-0.25, 3.0, 0.5, branch="quartic"),
        ]:
            for b2, s in phi.domain.grid(5, 5):
                assert phi.value(b2, s) > 0.0

    def test_quartic_root_identity(self):
        phi = solution_family(-0.25, 3.0, 0.5, branch="quartic")
        for b2, s in phi.domain.grid(7, 7):
            assert abs(quartic_root_residual(phi, b2, s)) < 1e-12

    def test_quartic_matches_branch_iii(self):
        q = solution_family(-0.25, 3.0, 0.5, branch="quartic")
        e = solution_family(-0.25, 3.0, 0.5, branch="iii")
        for b2, s in q.domain.grid(6, 6):
            assert q.value(b2, s) == pytest.approx(e.value(b2, s), rel=1e-10)

    def test_quartic_matches_branch_iv(self):
        q = solution_family(1.0, 2.0, 0.5, branch="quartic")
        e = solution_family(1.0, 2.0, 0.5, branch="iv")
        for b2, s in q.domain.grid(6, 6, b2_max=1.5):
            assert q.value(b2, s) == pytest.approx(e.value(b2, s), rel=1e-10)

    def test_branch_i_matches_d_zero_limit_of_quartic(self):
        # branch (i) is the D -> 0 limit of the finite q-root
        bi = solution_family(-1.0, 2.0, branch="i")
        qs = solution_family(-1.0, 2.0, 1e-7, branch="quartic")
        for b2, s in [(0.5, 0.2), (1.0, -0.4), (0.1, 0.0)]:
            assert qs.value(b2, s) == pytest.approx(bi.value(b2, s), rel=1e-6)

    def test_branch_iii_empty_domain(self):
        with pytest.raises(PhiDomainError, match="empty domain"):
            solution_family(-1.0, 0.5, 2.0, branch="iii")

    def test_branch_parameter_validation(self):
        with pytest.raises(PhiDomainError):
            solution_family(1.0, 2.0, branch="i")  # needs sigma < 0
        with pytest.raises(PhiDomainError):
            solution_family(-1.0, 2.0, 0.0, branch="ii")  # needs D != 0


# ---------------------------------------------------------------------------
# Berwald-type family and perturbations
# ---------------------------------------------------------------------------

class TestBerwaldFamily:
    def test_constant_profile(self):
        phi = berwald_family(lambda z: 1.0 + 0.0 * z)
        assert phi.value(4.0, 1.0) == pytest.approx(0.5, abs=1e-15)
        assert phi.phijet(4.0, 1.0).phi2 == pytest.approx(0.0, abs=1e-15)

    def test_linear_profile_value(self):
        phi = berwald_family(lambda z: 1.0 + z)
        assert phi.value(4.0, 1.0) == pytest.approx(0.75, abs=1e-15)

    def test_positivity_required(self):
        with pytest.raises(PhiDomainError):
            berwald_family(lambda z: -1.0 + 0.0 * z)


class TestPerturbation:
    def test_shifts_value_by_eps_s_cubed(self):
        base = randers_phi()
        pert = with_s3_perturbation(base, 1e-3)
        b2, s = 0.3, 0.25
        assert pert.value(b2, s) - base.value(b2, s) == pytest.approx(1e-3 * s ** 3, rel=1e-10)


# ---------------------------------------------------------------------------
# regularity
# ---------------------------------------------------------------------------

class TestRegularity:
    def test_constant_phi_regular(self):
        res = regularity_check(constant_phi(), b2_max=0.9)
        assert res.passed
        assert res.min_first == pytest.approx(1.0)
        assert res.min_second == pytest.approx(1.0)

    def test_randers_regular_up_to_09(self):
        res = regularity_check(randers_phi(), b2_max=0.9)
        assert res.passed

    def test_square_regular(self):
        res = regularity_check(square_phi(), b2_max=0.8)
        assert res.passed

    def test_non_regular_witness(self):
        # phi = 1 - 2s fails the second inequality near s = 0.5
        def expr(b2, s):
            return 1.0 - 2.0 * s + 0.0 * b2

        from finslerab.phi import PhiDomain, PhiSpec

        bad = PhiSpec("bad", expr, PhiDomain(0.0, 0.9))
        res = regularity_check(bad)
        assert not res.passed
        b2, s, first, second = res.witness
        assert first <= 0.0 or second <= 0.0
        # phi - s phi2 = 1 + s crosses zero only at s = -1; the failure here
        # is the first inequality going negative for s > 0.5
        assert s > 0.0
