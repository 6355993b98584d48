import itertools

import numpy as np
import pytest

from rescloak.errors import AdmissibilityError
from rescloak.tensors import (
    ElasticTensor4,
    IsotropicModuli,
    VoigtMatrix,
    check_symmetries,
    convexity_constant,
    from_voigt,
    make_isotropic_residual,
    to_voigt,
)


def brute_force_entries(lam, mu, t, dim):
    """Index-by-index evaluation of the defining formula."""
    d = np.eye(dim)
    c = np.empty((dim,) * 4)
    for i, j, k, l in itertools.product(range(dim), repeat=4):
        c[i, j, k, l] = (
            lam * d[i, j] * d[k, l]
            + mu * (d[i, k] * d[j, l] + d[i, l] * d[j, k])
            + t[j, l] * d[i, k]
        )
    return c


def grid_min_quadratic_form(c, n_angles=240):
    """Brute-force minimum of the form over unit symmetric 2x2 matrices.

    Parametrizes the unit sphere of (e11, e22, sqrt(2) e12) coordinates.
    """
    best = np.inf
    us = np.linspace(0.0, np.pi, n_angles)
    vs = np.linspace(0.0, 2.0 * np.pi, 2 * n_angles, endpoint=False)
    for u in us:
        for v in vs:
            e11 = np.sin(u) * np.cos(v)
            e22 = np.sin(u) * np.sin(v)
            e12 = np.cos(u) / np.sqrt(2.0)
            eps = np.array([[e11, e12], [e12, e22]])
            best = min(best, np.einsum("ijkl,ij,kl->", c, eps, eps))
    return best


class TestMakeIsotropicResidual:
    def test_paper_values_lambda_mu_one(self):
        c = make_isotropic_residual(IsotropicModuli(1.0, 1.0), np.zeros((2, 2)), 2)
        assert c[0, 0, 0, 0] == pytest.approx(3.0)
        assert c[0, 0, 1, 1] == pytest.approx(1.0)
        assert c[0, 1, 0, 1] == pytest.approx(1.0)

    def test_zero_moduli(self):
        c = make_isotropic_residual(IsotropicModuli(0.0, 0.0), np.zeros((2, 2)), 2)
        assert np.all(c.entries == 0.0)

    def test_minor_symmetry_broken_by_t22(self):
        t = np.array([[0.0, 0.0], [0.0, 1.0]])
        c = make_isotropic_residual(IsotropicModuli(0.0, 1.0), t, 2)
        oracle = brute_force_entries(0.0, 1.0, t, 2)
        np.testing.assert_allclose(c.entries, oracle, atol=0.0)
        assert c[0, 1, 0, 1] == pytest.approx(2.0)
        assert c[1, 0, 0, 1] == pytest.approx(1.0)

    @pytest.mark.parametrize("dim", [2, 3])
    def test_matches_brute_force(self, dim, rng):
        a = rng.normal(size=(dim, dim))
        t = 0.5 * (a + a.T)
        lam, mu = rng.uniform(0.5, 2.0, 2)
        c = make_isotropic_residual(IsotropicModuli(lam, mu), t, dim)
        np.testing.assert_allclose(c.entries, brute_force_entries(lam, mu, t, dim), rtol=1e-15)

    def test_rejects_asymmetric_t(self):
        with pytest.raises(AdmissibilityError):
            make_isotropic_residual(
                IsotropicModuli(1.0, 1.0), np.array([[0.0, 1.0], [0.0, 0.0]]), 2
            )

    def test_major_symmetry_always(self, rng):
        for _ in range(20):
            a = rng.normal(size=(2, 2))
            t = 0.5 * (a + a.T)
            lam, mu = rng.normal(size=2)
            c = make_isotropic_residual(IsotropicModuli(lam, mu), t, 2)
            major, _ = check_symmetries(c)
            assert major


class TestCheckSymmetries:
    def test_classical_isotropic(self):
        c = make_isotropic_residual(IsotropicModuli(1.3, 0.7), np.zeros((2, 2)), 2)
        assert check_symmetries(c) == (True, True)

    def test_residual_breaks_minor(self):
        t = np.diag([0.0, 1.0])
        c = make_isotropic_residual(IsotropicModuli(1.0, 1.0), t, 2)
        assert check_symmetries(c) == (True, False)

    def test_perturbed_input_fails_major(self):
        c = make_isotropic_residual(IsotropicModuli(1.0, 1.0), np.zeros((2, 2)), 2)
        entries = c.entries.copy()
        entries[0, 0, 1, 0] += 1.0  # breaks C_0010 == C_1000
        major, _ = check_symmetries(ElasticTensor4(2, entries))
        assert not major

    def test_zero_tensor_passes_both(self):
        c = ElasticTensor4(2, np.zeros((2, 2, 2, 2)))
        assert check_symmetries(c) == (True, True)


class TestConvexityConstant:
    def test_pure_shear_modulus(self):
        c = make_isotropic_residual(IsotropicModuli(0.0, 1.0), np.zeros((2, 2)), 2)
        assert convexity_constant(c) == pytest.approx(2.0, abs=1e-12)
        assert grid_min_quadratic_form(c.entries) == pytest.approx(2.0, abs=1e-4)

    def test_zero_tensor(self):
        assert convexity_constant(ElasticTensor4(2, np.zeros((2, 2, 2, 2)))) == 0.0

    def test_lame_one_one_matches_grid(self):
        c = make_isotropic_residual(IsotropicModuli(1.0, 1.0), np.zeros((2, 2)), 2)
        dense = convexity_constant(c)
        assert dense == pytest.approx(grid_min_quadratic_form(c.entries), abs=1e-4)
        assert dense == pytest.approx(2.0, abs=1e-12)

    def test_positive_iff_moduli_convex(self, rng):
        for _ in range(10):
            lam = rng.uniform(-0.8, 2.0)
            mu = rng.uniform(0.1, 2.0)
            c0 = convexity_constant(
                make_isotropic_residual(IsotropicModuli(lam, mu), np.zeros((2, 2)), 2)
            )
            if mu > 0 and 2 * lam + 2 * mu > 0:
                assert c0 > 0
        negative = make_isotropic_residual(IsotropicModuli(-2.0, 1.0), np.zeros((2, 2)), 2)
        assert convexity_constant(negative) < 0  # report, not an error

    def test_matches_grid_minimum_with_residual(self, rng):
        a = rng.normal(size=(2, 2)) * 0.3
        t = 0.5 * (a + a.T)
        c = make_isotropic_residual(IsotropicModuli(1.0, 1.0), t, 2)
        assert convexity_constant(c) == pytest.approx(
            grid_min_quadratic_form(c.entries), abs=1e-4
        )


class TestVoigt:
    def test_isotropic_table(self):
        lam, mu = 1.7, 0.6
        c = make_isotropic_residual(IsotropicModuli(lam, mu), np.zeros((2, 2)), 2)
        expected = np.array(
            [[lam + 2 * mu, lam, 0.0], [lam, lam + 2 * mu, 0.0], [0.0, 0.0, mu]]
        )
        np.testing.assert_allclose(to_voigt(c).m, expected, atol=1e-14)

    def test_residual_table(self):
        t11, t22, t12 = 0.4, -0.2, 0.15
        t = np.array([[t11, t12], [t12, t22]])
        c = make_isotropic_residual(IsotropicModuli(0.0, 0.0), t, 2)
        expected = np.array(
            [[t11, 0.0, t12], [0.0, t22, t12], [t12, t12, t11 + t22]]
        )
        np.testing.assert_allclose(to_voigt(c).m, expected, atol=1e-14)

    def test_zero(self):
        c = ElasticTensor4(2, np.zeros((2, 2, 2, 2)))
        assert np.all(to_voigt(c).m == 0.0)

    def test_voigt_symmetric(self, rng):
        a = rng.normal(size=(3, 3))
        t = 0.5 * (a + a.T)
        c = make_isotropic_residual(IsotropicModuli(1.1, 0.8), t, 3)
        m = to_voigt(c).m
        np.testing.assert_allclose(m, m.T, atol=1e-14)

    @pytest.mark.parametrize("dim", [2, 3])
    def test_round_trip_on_family(self, dim, rng):
        for _ in range(10):
            a = rng.normal(size=(dim, dim))
            t = 0.5 * (a + a.T)
            lam, mu = rng.uniform(-0.5, 2.0, 2)
            c = make_isotropic_residual(IsotropicModuli(lam, mu), t, dim)
            back = from_voigt(to_voigt(c))
            np.testing.assert_allclose(back.entries, c.entries, atol=1e-14)

    def test_bad_dim_rejected(self):
        with pytest.raises(AdmissibilityError):
            VoigtMatrix(4, np.zeros((3, 3)))
