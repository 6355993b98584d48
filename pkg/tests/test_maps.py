import numpy as np
import pytest

from rescloak.errors import AdmissibilityError, DomainError, OrientationError
from rescloak.maps import (
    POLAR_ENTRY_KEYS,
    JacobianSample,
    RadialMap,
    f0,
    fh,
    fh_inverse,
    jacobian,
    polar_cloak_entries,
    push_forward_density,
    push_forward_tensor,
    rotate_tensor,
)
from rescloak.tensors import (
    ElasticTensor4,
    IsotropicModuli,
    check_symmetries,
    convexity_constant,
    make_isotropic_residual,
)

IDX = {"r": 0, "t": 1}


def fd_jacobian(fun, x, step=1e-7):
    n = len(x)
    m = np.empty((n, n))
    for j in range(n):
        e = np.zeros(n)
        e[j] = step
        m[:, j] = (fun(x + e) - fun(x - e)) / (2.0 * step)
    return m


def random_symmetric(rng, scale=0.1):
    a = rng.normal(size=(2, 2)) * scale
    return 0.5 * (a + a.T)


def random_jacobian(rng, cond_max=10.0):
    """Random well-conditioned orientation-preserving Jacobian."""
    q1, _ = np.linalg.qr(rng.normal(size=(2, 2)))
    q2, _ = np.linalg.qr(rng.normal(size=(2, 2)))
    smax = rng.uniform(1.0, 3.0)
    s = np.diag([smax, smax / rng.uniform(1.0, cond_max)])
    m = q1 @ s @ q2.T
    if np.linalg.det(m) < 0:
        m = m @ np.diag([1.0, -1.0])
    return JacobianSample(m, float(np.linalg.det(m)))


class TestBlowupMap:
    def test_identity_on_outer_circle(self):
        x = 2.0 * np.array([np.cos(0.3), np.sin(0.3)])
        np.testing.assert_allclose(f0(x), x, atol=1e-15)

    def test_direct_substitution(self):
        np.testing.assert_allclose(f0(np.array([1.0, 0.0])), [1.5, 0.0])

    def test_blows_origin_to_unit_circle(self):
        for s in (1e-3, 1e-6, 1e-9):
            r = np.linalg.norm(f0(np.array([s, 0.0])))
            assert abs(r - 1.0) < s

    def test_origin_rejected(self):
        with pytest.raises(DomainError):
            f0(np.zeros(2))


class TestRegularizedMap:
    def test_identity_on_outer_circle(self):
        x = 2.0 * np.array([np.cos(1.1), np.sin(1.1)])
        np.testing.assert_allclose(fh(x, 0.3), x, atol=1e-14)

    @pytest.mark.parametrize("h", [0.5, 0.25, 0.1])
    def test_inner_interface_to_unit_circle(self, h):
        x = h * np.array([np.cos(0.7), np.sin(0.7)])
        assert np.linalg.norm(fh(x, h)) == pytest.approx(1.0, abs=1e-14)

    @pytest.mark.parametrize("h", [0.5, 0.25, 0.1])
    def test_half_scale_core(self, h):
        x = 0.5 * h * np.array([1.0, 0.0])
        assert np.linalg.norm(fh(x, h)) == pytest.approx(0.5, abs=1e-15)

    def test_round_trip(self, rng):
        for h in (0.4, 0.2, 0.05):
            for _ in range(20):
                x = rng.uniform(-1.0, 1.0, 2) * rng.uniform(0.0, 2.0) / np.sqrt(2)
                y = fh(x, h)
                np.testing.assert_allclose(fh_inverse(y, h), x, atol=1e-13)

    def test_bad_h_rejected(self):
        with pytest.raises(AdmissibilityError):
            fh(np.array([1.0, 0.0]), 1.5)
        with pytest.raises(AdmissibilityError):
            fh_inverse(np.array([1.0, 0.0]), 0.0)

    def test_converges_to_blowup_monotonically(self):
        x = np.array([0.5, 0.35])
        gaps = [np.linalg.norm(fh(x, h) - f0(x)) for h in (0.4, 0.2, 0.1, 0.05)]
        assert all(b < a for a, b in zip(gaps, gaps[1:]))
        assert gaps[-1] < 0.05


class TestJacobian:
    def test_blowup_det_2d(self):
        # image radius 1.5 has preimage radius 1
        samp = jacobian(RadialMap("blowup"), np.array([1.0, 0.0]))
        assert samp.det == pytest.approx(1.5 / (4.0 * 0.5))

    def test_blowup_det_3d(self):
        samp = jacobian(RadialMap("blowup"), np.array([1.0, 0.0, 0.0]))
        assert samp.det == pytest.approx(1.5 ** 2 / (8.0 * 0.5 ** 2))

    def test_matches_finite_differences(self, rng):
        blow = RadialMap("blowup")
        reg = RadialMap("regularized", 0.3)
        for _ in range(10):
            x = rng.uniform(-1, 1, 2)
            x *= rng.uniform(0.4, 1.9) / np.linalg.norm(x)
            np.testing.assert_allclose(
                jacobian(blow, x).M, fd_jacobian(f0, x), atol=1e-7
            )
            np.testing.assert_allclose(
                jacobian(reg, x).M, fd_jacobian(lambda z: fh(z, 0.3), x), atol=1e-7
            )

    def test_det_near_identity_at_boundary(self):
        x = np.array([2.0 - 1e-6, 0.0])
        for h in (0.4, 0.1):
            samp = jacobian(RadialMap("regularized", h), x)
            fd = fd_jacobian(lambda z: fh(z, h), x, step=1e-8)
            np.testing.assert_allclose(samp.M, fd, atol=1e-6)
            assert samp.det == pytest.approx(np.linalg.det(fd), rel=1e-5)

    def test_inner_branch_is_dilation(self):
        samp = jacobian(RadialMap("regularized", 0.4), np.array([0.1, 0.05]))
        np.testing.assert_allclose(samp.M, np.eye(2) / 0.4)
        assert samp.det == pytest.approx(0.4 ** -2)

    def test_kink_uses_outer_branch(self):
        h = 0.4
        x = np.array([h, 0.0])
        samp = jacobian(RadialMap("regularized", h), x)
        assert samp.M[0, 0] == pytest.approx(1.0 / (2.0 - h))


class TestPushForward:
    def test_identity_fixed_point(self, rng):
        c = make_isotropic_residual(IsotropicModuli(1.2, 0.8), random_symmetric(rng), 2)
        out = push_forward_tensor(c, JacobianSample(np.eye(2), 1.0))
        np.testing.assert_array_equal(out.entries, c.entries)

    def test_conformal_scaling_2d(self):
        c = make_isotropic_residual(IsotropicModuli(1.0, 1.0), np.zeros((2, 2)), 2)
        out = push_forward_tensor(c, JacobianSample(2.0 * np.eye(2), 4.0))
        np.testing.assert_allclose(out.entries, c.entries, atol=1e-15)

    def test_brute_force_formula(self, rng):
        c = make_isotropic_residual(IsotropicModuli(0.9, 1.4), random_symmetric(rng), 2)
        samp = random_jacobian(rng)
        out = push_forward_tensor(c, samp)
        ref = np.zeros((2, 2, 2, 2))
        for i in range(2):
            for q in range(2):
                for k in range(2):
                    for p in range(2):
                        ref[i, q, k, p] = sum(
                            c.entries[i, j, k, l] * samp.M[p, l] * samp.M[q, j]
                            for j in range(2)
                            for l in range(2)
                        ) / samp.det
        np.testing.assert_allclose(out.entries, ref, rtol=1e-14)

    def test_composition_law(self, rng):
        c = make_isotropic_residual(IsotropicModuli(1.0, 1.0), random_symmetric(rng), 2)
        for _ in range(10):
            s1 = random_jacobian(rng)
            s2 = random_jacobian(rng)
            combined = JacobianSample(s2.M @ s1.M, float(np.linalg.det(s2.M @ s1.M)))
            once = push_forward_tensor(c, combined)
            twice = push_forward_tensor(push_forward_tensor(c, s1), s2)
            np.testing.assert_allclose(
                twice.entries, once.entries, rtol=1e-12, atol=1e-12 * c.max_abs()
            )
            assert combined.det == pytest.approx(s1.det * s2.det, rel=1e-12)

    def test_symmetry_and_convexity_preserved(self, rng):
        for _ in range(20):
            t = random_symmetric(rng)
            if np.max(np.abs(t)) < 1e-3:
                continue
            c = make_isotropic_residual(IsotropicModuli(1.0, 1.0), t, 2)
            assert convexity_constant(c) > 0
            out = push_forward_tensor(c, random_jacobian(rng))
            major, minor = check_symmetries(out)
            assert major and not minor
            assert convexity_constant(out) > 0

    def test_orientation_error(self):
        c = make_isotropic_residual(IsotropicModuli(1.0, 1.0), np.zeros((2, 2)), 2)
        bad = JacobianSample(np.diag([1.0, -1.0]), -1.0)
        with pytest.raises(OrientationError):
            push_forward_tensor(c, bad)
        with pytest.raises(OrientationError):
            push_forward_density(1.0, bad)


class TestPushForwardDensity:
    def test_identity(self):
        assert push_forward_density(1.0, JacobianSample(np.eye(2), 1.0)) == 1.0

    def test_blowup_density(self):
        samp = jacobian(RadialMap("blowup"), np.array([1.0, 0.0]))
        assert push_forward_density(1.0, samp) == pytest.approx(4.0 / 3.0)

    def test_complex_linearity(self):
        samp = JacobianSample(np.diag([2.0, 1.0]), 2.0)
        assert push_forward_density(3.0 + 4.0j, samp) == pytest.approx(1.5 + 2.0j)


class TestPolarCloakEntries:
    def test_lame_values_at_r_three_halves(self):
        e = polar_cloak_entries(1.5, 1.0, 1.0, np.zeros((2, 2)))
        assert e["rrrr"] == pytest.approx(1.0)
        assert e["tttt"] == pytest.approx(9.0)

    def test_degeneracy_towards_unit_circle(self):
        e = polar_cloak_entries(1.0 + 1e-9, 1.0, 1.0, np.zeros((2, 2)))
        assert e["rrrr"] < 1e-8
        assert e["tttt"] > 1e8

    def test_r_out_of_range(self):
        with pytest.raises(DomainError):
            polar_cloak_entries(2.5, 1.0, 1.0, np.zeros((2, 2)))

    @pytest.mark.parametrize("r", [1.1, 1.3, 1.5, 1.8])
    def test_matches_push_forward_in_polar_frame(self, r, rng):
        """The closed forms against the general transform: two routes."""
        lam0, mu0 = 1.3, 0.9
        t_cart = random_symmetric(rng)
        blow = RadialMap("blowup")
        for theta in (0.0, 0.9, 2.4):
            s = 2.0 * (r - 1.0)
            x = s * np.array([np.cos(theta), np.sin(theta)])
            c = make_isotropic_residual(IsotropicModuli(lam0, mu0), t_cart, 2)
            pushed = push_forward_tensor(c, jacobian(blow, x))
            polar = rotate_tensor(pushed, theta)
            rot = np.array(
                [[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]]
            )
            entries = polar_cloak_entries(r, lam0, mu0, rot.T @ t_cart @ rot)
            for key, val in entries.items():
                i, j, k, l = (IDX[ch] for ch in key)
                assert polar.entries[i, j, k, l] == pytest.approx(val, abs=1e-10)
            # the remaining four slots vanish
            for i in range(2):
                for j in range(2):
                    for k in range(2):
                        for l in range(2):
                            key = "".join("rt"[v] for v in (i, j, k, l))
                            if key not in POLAR_ENTRY_KEYS:
                                assert abs(polar.entries[i, j, k, l]) < 1e-10
