import numpy as np
import pytest

from rescloak.errors import AdmissibilityError
from rescloak.residual import (
    AiryPotential,
    Bump,
    ResidualStressField,
    airy_to_stress,
    default_bump_field,
    verify_admissible,
)
from rescloak.tensors import IsotropicModuli


def fd_divergence(field, x, step=1e-5):
    """Centered-difference divergence rows sum_l d_l t_jl."""
    out = np.zeros(2)
    for j in range(2):
        for l in range(2):
            e = np.zeros(2)
            e[l] = step
            out[j] += (field.t(x + e)[j, l] - field.t(x - e)[j, l]) / (2.0 * step)
    return out


class TestAiryToStress:
    def test_zero_potential(self):
        field = airy_to_stress(AiryPotential((), 2.0))
        x = np.array([0.3, -0.7])
        assert np.all(field.t(x) == 0.0)
        assert np.all(field.grad_t(x) == 0.0)

    def test_divergence_free_fd_oracle(self, bump_field):
        worst = 0.0
        for x in np.linspace(0.15, 0.85, 50):
            for y in np.linspace(-0.35, 0.35, 50):
                res = fd_divergence(bump_field, np.array([x, y]))
                worst = max(worst, float(np.max(np.abs(res))))
        assert worst <= 1e-8

    def test_analytic_divergence_exactly_zero(self, bump_field, rng):
        for _ in range(100):
            x = rng.uniform(-1.0, 1.0, 2)
            assert np.all(bump_field.divergence(x) == 0.0)

    def test_gradient_matches_fd(self, bump_field, rng):
        step = 1e-6
        for _ in range(30):
            x = rng.uniform(0.2, 0.8, 2) * np.array([1.0, 0.4])
            g = bump_field.grad_t(x)
            for m in range(2):
                e = np.zeros(2)
                e[m] = step
                fd = (bump_field.t(x + e) - bump_field.t(x - e)) / (2.0 * step)
                np.testing.assert_allclose(g[:, :, m], fd, atol=5e-6)

    def test_symmetric_by_storage(self, bump_field, rng):
        for _ in range(50):
            x = rng.uniform(-0.9, 0.9, 2)
            t = bump_field.t(x)
            assert t[0, 1] == t[1, 0]

    def test_vanishes_outside_support(self, bump_field):
        assert bump_field.support_radius == pytest.approx(0.8)
        for theta in np.linspace(0.0, 2.0 * np.pi, 40):
            x = 1.2 * np.array([np.cos(theta), np.sin(theta)])
            assert np.all(bump_field.t(x) == 0.0)

    def test_amplitude_scaling(self, rng):
        base = airy_to_stress(AiryPotential((Bump((0.4, 0.1), 0.25, 0.2),), 2.0))
        tripled = airy_to_stress(AiryPotential((Bump((0.4, 0.1), 0.25, 0.6),), 2.0))
        for _ in range(20):
            x = rng.uniform(0.1, 0.7, 2)
            np.testing.assert_allclose(tripled.t(x), 3.0 * base.t(x), rtol=1e-13)

    def test_amplitude_is_peak_stress(self, bump_field):
        peak = 0.0
        for x in np.linspace(0.2, 0.8, 200):
            for y in np.linspace(-0.3, 0.3, 200):
                peak = max(peak, float(np.max(np.abs(bump_field.t(np.array([x, y]))))))
        assert peak == pytest.approx(0.1, rel=2e-2)

    def test_bump_touching_boundary_rejected(self):
        with pytest.raises(AdmissibilityError):
            AiryPotential((Bump((1.8, 0.0), 0.3, 0.1),), 2.0)


class TestVerifyAdmissible:
    def test_zero_field(self, unit_moduli):
        rep = verify_admissible(ResidualStressField.zero(2), unit_moduli, 2.0, 20)
        assert rep.symmetry_ok
        assert rep.divfree_max_residual == 0.0
        assert rep.boundary_traction_max == 0.0
        assert rep.min_convexity_over_samples == pytest.approx(2.0, abs=1e-12)
        assert rep.admissible

    def test_default_bump_admissible(self, bump_field, unit_moduli):
        rep = verify_admissible(bump_field, unit_moduli, 2.0, 50)
        assert rep.admissible
        assert rep.min_convexity_over_samples > 1.5

    def test_huge_amplitude_reported_inadmissible(self, unit_moduli):
        field = airy_to_stress(AiryPotential((Bump((0.5, 0.0), 0.3, 1e3),), 2.0))
        rep = verify_admissible(field, unit_moduli, 2.0, 50)
        assert rep.min_convexity_over_samples < 0.0
        assert not rep.admissible
        # cross-check via the rank-one strain e1 x e1 at a strongly
        # stressed point: the form value drops below zero there
        x = np.array([0.62, 0.0])
        t = field.t(x)
        from rescloak.tensors import make_isotropic_residual

        c = make_isotropic_residual(unit_moduli, t, 2)
        eps = np.outer([1.0, 0.0], [1.0, 0.0])
        form = np.einsum("ijkl,ij,kl->", c.entries, eps, eps)
        assert min(form, rep.min_convexity_over_samples) < 0.0


def test_default_field_parameters(bump_field):
    assert bump_field.dim == 2
    assert bump_field.support_radius < 2.0
