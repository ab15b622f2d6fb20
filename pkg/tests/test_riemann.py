"""Tests for Riemannian backends, Christoffel symbols, sprays, Ricci."""

import math

import numpy as np
import pytest

from finslerab import riemann
from finslerab.riemann import (
    GeometryError,
    christoffel,
    euclidean,
    make_warped,
    ricci_alpha,
    space_form,
    spray_alpha,
)


def fd_christoffel(g, x, h=1e-6):
    """Independent finite-difference oracle: explicit index loops, no einsum."""
    n = g.dim
    x = np.asarray(x, dtype=float)
    dA = np.empty((n, n, n))  # dA[i, j, k] = d a_ij / d x^k
    for k in range(n):
        e = np.zeros(n)
        e[k] = h
        dA[:, :, k] = (g.matrix(x + e) - g.matrix(x - e)) / (2 * h)
    inv = g.inverse(x)
    Gam = np.zeros((n, n, n))
    for i in range(n):
        for j in range(n):
            for k in range(n):
                acc = 0.0
                for l in range(n):
                    acc += inv[i, l] * (dA[l, j, k] + dA[l, k, j] - dA[j, k, l])
                Gam[i, j, k] = 0.5 * acc
    return Gam


# ---------------------------------------------------------------------------
# Christoffel symbols
# ---------------------------------------------------------------------------

class TestChristoffel:
    def test_euclidean_all_zero(self):
        g = euclidean(3)
        for x in ([0.0, 0.0, 0.0], [1.0, -2.0, 0.3]):
            np.testing.assert_allclose(christoffel(g, x), 0.0)

    def test_polar_type_warped(self):
        # dt^2 + t^2 dtheta^2: Gamma^t_{theta theta} = -t, Gamma^theta_{t theta} = 1/t
        g = make_warped(0.0, (0.0, 1.0), euclidean(1))
        t = 2.0
        Gam = christoffel(g, [t, 0.7])
        assert Gam[0, 1, 1] == pytest.approx(-t, abs=1e-12)
        assert Gam[1, 0, 1] == pytest.approx(1.0 / t, abs=1e-12)
        assert Gam[1, 1, 0] == pytest.approx(1.0 / t, abs=1e-12)
        assert Gam[0, 0, 0] == pytest.approx(0.0, abs=1e-12)

    @pytest.mark.parametrize(
        "g,x",
        [
            (space_form(3, 1.0), [0.2, -0.1, 0.3]),
            (space_form(3, -1.0), [0.1, 0.25, -0.2]),
            (make_warped(1.0, (0.0, 1.0), space_form(2, 1.0)), [0.8, 0.1, -0.2]),
            (make_warped(-1.0, (1.0, 0.0), space_form(2, -1.0)), [0.4, 0.3, 0.2]),
        ],
    )
    def test_against_fd_oracle(self, g, x):
        np.testing.assert_allclose(christoffel(g, x), fd_christoffel(g, x), atol=1e-8)

    def test_symmetry_in_lower_indices(self):
        g = space_form(3, 0.7)
        Gam = christoffel(g, [0.3, 0.1, -0.4])
        np.testing.assert_allclose(Gam, Gam.transpose(0, 2, 1), atol=1e-15)

    def test_singular_point_raises(self):
        g = make_warped(0.0, (0.0, 1.0), euclidean(1))
        with pytest.raises(GeometryError):
            christoffel(g, [0.0, 0.5])  # h(t) = t vanishes


# ---------------------------------------------------------------------------
# spray of alpha
# ---------------------------------------------------------------------------

class TestSprayAlpha:
    def test_euclidean_zero(self):
        g = euclidean(3)
        np.testing.assert_allclose(spray_alpha(g, [0.1, 0.2, 0.3], [1.0, -1.0, 2.0]), 0.0)

    def test_flat_polar_value(self):
        g = make_warped(0.0, (0.0, 1.0), euclidean(1))
        G = spray_alpha(g, [2.0, 0.3], [1.0, 1.0])
        assert G[0] == pytest.approx(-1.0, abs=1e-12)  # 1/2 * Gamma^t_{tt..} contraction
        assert G[1] == pytest.approx(0.5, abs=1e-12)   # 1/2 * 2 * (1/t) * 1 * 1

    def test_degree_two_homogeneity(self):
        g = space_form(3, 1.0)
        x, y = [0.2, 0.1, -0.3], np.array([0.7, -0.4, 1.1])
        G1 = spray_alpha(g, x, y)
        G2 = spray_alpha(g, x, 2.0 * y)
        np.testing.assert_allclose(G2, 4.0 * G1, rtol=1e-14)

    def test_zero_vector_rejected(self):
        with pytest.raises(GeometryError):
            spray_alpha(euclidean(2), [0.0, 0.0], [0.0, 0.0])


# ---------------------------------------------------------------------------
# Ricci curvature
# ---------------------------------------------------------------------------

class TestRicciAlpha:
    def test_euclidean_zero(self):
        g = euclidean(3)
        ric, err = ricci_alpha(g, [0.3, -0.2, 0.5], [1.0, 2.0, -0.5])
        assert abs(ric) < 1e-10
        assert err < 1e-9

    def test_product_of_flats(self):
        g = make_warped(0.0, (1.0, 0.0), euclidean(2))
        ric, _ = ricci_alpha(g, [0.5, 0.1, -0.7], [1.0, 0.3, 0.8])
        assert abs(ric) < 1e-9

    @pytest.mark.parametrize("x,y", [
        ([0.7, 0.05, -0.1], [1.0, 0.4, -0.2]),
        ([1.1, -0.2, 0.15], [0.3, 1.0, 0.7]),
    ])
    def test_round_s3_constant_curvature(self, x, y):
        # mu = 1, h = sin t over the unit 2-sphere: Ric = (n-1) mu alpha^2 = 2 alpha^2
        g = make_warped(1.0, (0.0, 1.0), space_form(2, 1.0))
        ric, err = ricci_alpha(g, x, y)
        a2 = g.alpha2(list(map(float, x)), list(map(float, y)))
        assert ric == pytest.approx(2.0 * a2, rel=1e-5)

    def test_space_form_einstein(self):
        mu = -0.7
        g = space_form(3, mu)
        x, y = [0.15, -0.2, 0.1], [0.5, 1.0, -0.3]
        ric, err = ricci_alpha(g, x, y)
        a2 = g.alpha2(x, y)
        assert ric == pytest.approx(2.0 * mu * a2, rel=1e-5)

    def test_error_estimate_reported(self):
        g = space_form(3, 1.0)
        ric, err = ricci_alpha(g, [0.1, 0.2, 0.0], [1.0, 0.0, 0.5])
        assert err >= 0.0
        assert err < 1e-4


# ---------------------------------------------------------------------------
# warped products
# ---------------------------------------------------------------------------

class TestMakeWarped:
    def test_s3_kappa(self):
        g = make_warped(1.0, (0.0, 1.0), space_form(2, 1.0), hat_einstein_const=1.0)
        assert g.meta["kappa"] == pytest.approx(1.0)

    def test_flat_product_kappa_zero(self):
        g = make_warped(0.0, (1.0, 0.0), euclidean(2), hat_einstein_const=0.0)
        assert g.meta["kappa"] == pytest.approx(0.0)

    def test_hyperbolic_kappa(self):
        # mu=-1, h = cosh t: kappa = sinh^2 - cosh^2 = -1
        g = make_warped(-1.0, (1.0, 0.0), euclidean(2), hat_einstein_const=-1.0, check_hat=False)
        assert g.meta["kappa"] == pytest.approx(-1.0)

    @pytest.mark.parametrize("mu,h_init", [(1.0, (0.0, 1.0)), (-1.0, (1.0, 0.5)), (0.0, (1.0, 0.3))])
    def test_kappa_constant_along_t(self, mu, h_init):
        g = make_warped(mu, h_init, euclidean(2), check_hat=False)
        h, hp = g.meta["h"], g.meta["hp"]
        kappas = [hp(t) ** 2 + mu * h(t) ** 2 for t in np.linspace(0.1, 1.4, 9)]
        assert max(kappas) - min(kappas) < 1e-12

    def test_hat_einstein_const_mismatch(self):
        with pytest.raises(GeometryError):
            make_warped(1.0, (0.0, 1.0), space_form(2, 1.0), hat_einstein_const=3.0)

    def test_hat_failing_spot_check(self):
        # h'(0) = 2 forces kappa = 4, but the unit sphere is Einstein with 1
        with pytest.raises(GeometryError):
            make_warped(1.0, (0.0, 2.0), space_form(2, 1.0))

    def test_warped_einstein_identity(self):
        # Ric = (n-1) mu alpha^2 at several samples, mu = -1 with h = e^t-like profile
        mu = -1.0
        g = make_warped(mu, (1.0, 1.0), euclidean(2), check_hat=False)  # h = e^t, kappa = 0
        assert g.meta["kappa"] == pytest.approx(0.0)
        for x, y in [([0.2, 0.3, -0.1], [1.0, 0.2, 0.4]), ([0.6, -0.2, 0.5], [0.1, 1.0, -0.3])]:
            ric, err = ricci_alpha(g, x, y)
            a2 = g.alpha2(x, y)
            assert ric == pytest.approx(2.0 * mu * a2, rel=2e-5)

    def test_domain_restricted_to_positive_h(self):
        g = make_warped(1.0, (0.0, 1.0), space_form(2, 1.0))
        with pytest.raises(GeometryError):
            g.matrix([3.5, 0.0, 0.0])  # sin(3.5) < 0
