import mpmath as mp
import numpy as np
import pytest

from rescloak.errors import AdmissibilityError, DomainError
from rescloak.hankel import hankel1_pair
from rescloak.potentials import (
    LameKernelParams,
    double_layer_eval,
    fundamental_scalar,
    kupradze_tensor,
    single_layer_eval,
)

mp.mp.dps = 35

PARAMS = LameKernelParams(1.2, 0.8, 1.1)


def navier_residual(field, pt, lam, mu, eta, step=1e-3, dim=2):
    """Centered-difference Navier operator applied to a vector field."""
    e = np.eye(dim)
    u0 = field(pt)
    lap = sum(
        field(pt + step * e[d]) + field(pt - step * e[d]) - 2.0 * u0 for d in range(dim)
    ) / step ** 2

    def div(q):
        return sum(
            (field(q + step * e[d])[d] - field(q - step * e[d])[d]) / (2.0 * step)
            for d in range(dim)
        )

    gd = np.array(
        [(div(pt + step * e[d]) - div(pt - step * e[d])) / (2.0 * step) for d in range(dim)]
    )
    res = mu * lap + (lam + mu) * gd + eta ** 2 * u0
    return float(np.max(np.abs(res)) / np.max(np.abs(eta ** 2 * u0)))


class TestHankel:
    def test_against_arbitrary_precision_oracle(self):
        zs = np.concatenate(
            [
                np.geomspace(1e-3, 7.9, 30),
                np.linspace(8.0, 16.9, 25),
                np.linspace(17.0, 50.0, 25),
            ]
        )
        for z in zs:
            h0, h1 = hankel1_pair(float(z))
            ref0 = complex(mp.hankel1(0, mp.mpf(float(z))))
            ref1 = complex(mp.hankel1(1, mp.mpf(float(z))))
            assert abs(h0 - ref0) <= 1e-10 * abs(ref0)
            assert abs(h1 - ref1) <= 1e-10 * abs(ref1)

    def test_nonpositive_rejected(self):
        with pytest.raises(DomainError):
            hankel1_pair(0.0)


class TestFundamentalScalar:
    def test_static_limit_3d(self):
        x = np.array([1.0 / (4.0 * np.pi), 0.0, 0.0])
        val = fundamental_scalar(x, np.zeros(3), 1e-12, 3)
        assert abs(val) == pytest.approx(1.0, rel=1e-9)

    def test_2d_decay_envelope(self):
        for z in np.linspace(10.0, 50.0, 9):
            g = fundamental_scalar(np.array([z, 0.0]), np.zeros(2), 1.0, 2)
            envelope = 0.25 * np.sqrt(2.0 / (np.pi * z))
            assert abs(g) == pytest.approx(envelope, rel=0.05)

    def test_2d_helmholtz_fd(self):
        k = 1.3
        pt = np.array([1.0, 0.0])
        step = 1e-3
        e = np.eye(2)
        g0 = fundamental_scalar(pt, np.zeros(2), k, 2)
        lap = sum(
            fundamental_scalar(pt + step * e[d], np.zeros(2), k, 2)
            + fundamental_scalar(pt - step * e[d], np.zeros(2), k, 2)
            - 2.0 * g0
            for d in range(2)
        ) / step ** 2
        assert abs(lap + k ** 2 * g0) / abs(k ** 2 * g0) <= 1e-4

    def test_coincident_points_rejected(self):
        with pytest.raises(DomainError):
            fundamental_scalar(np.zeros(2), np.zeros(2), 1.0, 2)


class TestKupradze:
    def test_transpose_symmetry(self, rng):
        for _ in range(10):
            x, y = rng.normal(size=(2, 2))
            a = kupradze_tensor(x, y, PARAMS, 2)
            b = kupradze_tensor(y, x, PARAMS, 2)
            assert np.max(np.abs(a - b.T)) <= 1e-12

    @pytest.mark.parametrize("dim", [2, 3])
    def test_columns_solve_navier(self, dim):
        y = np.zeros(dim)
        pt = np.full(dim, 1.0 / np.sqrt(dim))
        for col in range(dim):
            field = lambda x: kupradze_tensor(x, y, PARAMS, dim)[:, col]
            assert navier_residual(field, pt, PARAMS.lam, PARAMS.mu, PARAMS.eta, dim=dim) <= 1e-4

    def test_joint_scaling(self):
        c = 2.7
        scaled = LameKernelParams(c * PARAMS.lam, c * PARAMS.mu, np.sqrt(c) * PARAMS.eta)
        x, y = np.array([0.4, 0.9]), np.array([-0.2, 0.1])
        a = kupradze_tensor(x, y, PARAMS, 2)
        b = kupradze_tensor(x, y, scaled, 2)
        np.testing.assert_allclose(b, a / c, rtol=1e-12)

    def test_wavenumber_ordering(self, rng):
        for _ in range(20):
            mu = rng.uniform(0.2, 3.0)
            lam = rng.uniform(-mu + 0.01, 3.0)
            p = LameKernelParams(lam, mu, rng.uniform(0.1, 4.0))
            assert p.kp < p.ks

    def test_invalid_moduli(self):
        with pytest.raises(AdmissibilityError):
            LameKernelParams(-3.0, 1.0, 1.0)
        with pytest.raises(AdmissibilityError):
            LameKernelParams(1.0, 1.0, 0.0)


SMOOTH = lambda t: np.array([np.cos(t) + 0.2, np.sin(2.0 * t)])


class TestLayerPotentials:
    def test_zero_density(self):
        x = np.array([1.7, 0.2])
        assert np.all(single_layer_eval(lambda t: np.zeros(2), x, PARAMS, 64) == 0.0)
        assert np.all(double_layer_eval(lambda t: np.zeros(2), x, PARAMS, 64) == 0.0)

    def test_far_field_decay(self):
        vals = []
        for r in (50.0, 100.0):
            x = np.array([r, 0.0])
            vals.append(np.linalg.norm(single_layer_eval(SMOOTH, x, PARAMS, 128)))
        # 1/sqrt(r) envelope: doubling r shrinks by about sqrt(2)
        assert vals[1] <= vals[0] / np.sqrt(2.0) * 1.2

    @pytest.mark.parametrize("evaluator", [single_layer_eval, double_layer_eval])
    def test_navier_residual(self, evaluator):
        field = lambda x: evaluator(SMOOTH, x, PARAMS, 300)
        assert (
            navier_residual(field, np.array([0.05, 0.1]), PARAMS.lam, PARAMS.mu, PARAMS.eta)
            <= 1e-4
        )

    @pytest.mark.parametrize("evaluator", [single_layer_eval, double_layer_eval])
    def test_spectral_quadrature_convergence(self, evaluator):
        x = np.array([1.6, 0.3])
        ref = evaluator(SMOOTH, x, PARAMS, 512)
        prev_err = None
        for n in (16, 32, 64):
            err = np.max(np.abs(evaluator(SMOOTH, x, PARAMS, n) - ref))
            if prev_err is not None and prev_err > 1e-10:
                assert err <= prev_err / 10.0
            prev_err = err
        assert err <= 1e-8 * max(1.0, np.max(np.abs(ref)))

    def test_doubling_stability(self):
        x = np.array([1.7, 0.2])
        a = single_layer_eval(SMOOTH, x, PARAMS, 200)
        b = single_layer_eval(SMOOTH, x, PARAMS, 400)
        assert np.max(np.abs(a - b)) <= 1e-8 * np.max(np.abs(b))

    def test_near_layer_rejected(self):
        with pytest.raises(DomainError):
            single_layer_eval(SMOOTH, np.array([1.01, 0.0]), PARAMS, 16)

    def test_offboundary_continuity(self):
        # walk a radial path away from the layer: consecutive values stay close
        vals = [
            double_layer_eval(SMOOTH, np.array([r, 0.12]), PARAMS, 256)
            for r in np.linspace(1.5, 2.5, 11)
        ]
        steps = [np.max(np.abs(b - a)) for a, b in zip(vals, vals[1:])]
        scale = max(np.max(np.abs(v)) for v in vals)
        assert max(steps) <= 0.5 * scale
