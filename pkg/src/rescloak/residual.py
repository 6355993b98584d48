"""Admissible residual-stress fields from scalar stress potentials.

A matrix field built as the curl-curl of a scalar potential is
automatically symmetric and divergence free, and compact support of the
potential makes the boundary traction vanish exactly.  The potentials
used here are sums of smooth radial bumps exp(-1/(1 - |x-c|^2/rho^2)),
whose derivatives are available in closed form.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence, Tuple

import numpy as np

from .errors import AdmissibilityError
from .tensors import IsotropicModuli, convexity_constant, make_isotropic_residual

__all__ = [
    "Bump",
    "AiryPotential",
    "ResidualStressField",
    "airy_to_stress",
    "verify_admissible",
    "AdmissibilityReport",
]


_UNIT_STRESS_PEAK: float = 0.0


def _unit_stress_peak() -> float:
    """Peak stress entry produced by the unit bump on the unit ball.

    Computed once on a fixed grid; used to normalize bump amplitudes so
    that ``amplitude`` is the peak stress the bump generates, not the
    raw potential scale (whose second derivatives are ~100x larger).
    """
    global _UNIT_STRESS_PEAK
    if _UNIT_STRESS_PEAK == 0.0:
        u = np.linspace(-0.999, 0.999, 601)
        uu, vv = np.meshgrid(u, u)
        s = uu * uu + vv * vv
        inside = s < 1.0
        g = np.zeros_like(s)
        g[inside] = 1.0 / (1.0 - s[inside])
        w = np.where(inside, np.exp(-g), 0.0)
        w1 = -w * g * g
        w2 = w * (g ** 4 - 2.0 * g ** 3)
        al = 2.0
        pxx = w2 * al * al * uu * uu + w1 * al
        pyy = w2 * al * al * vv * vv + w1 * al
        pxy = w2 * al * al * uu * vv
        _UNIT_STRESS_PEAK = float(
            max(np.max(np.abs(pxx)), np.max(np.abs(pyy)), np.max(np.abs(pxy)))
        )
    return _UNIT_STRESS_PEAK


@dataclass(frozen=True)
class Bump:
    """One compactly supported radial bump of the potential.

    ``amplitude`` is the peak stress entry the bump contributes: the
    underlying potential is rescaled by radius^2 over the unit-bump peak
    so that the generated field has max-abs entry equal to amplitude.
    """

    center: Tuple[float, float]
    radius: float
    amplitude: float

    def __post_init__(self):
        if self.radius <= 0.0:
            raise AdmissibilityError(f"bump radius must be positive, got {self.radius}")

    @property
    def potential_scale(self) -> float:
        return self.amplitude * self.radius ** 2 / _unit_stress_peak()


@dataclass(frozen=True)
class AiryPotential:
    """Sum of smooth bumps, each supported in its own ball.

    ``domain_radius`` is the radius of the disc the field must live in;
    every bump ball has to sit strictly inside it.
    """

    bumps: Tuple[Bump, ...]
    domain_radius: float = 2.0

    def __post_init__(self):
        object.__setattr__(self, "bumps", tuple(self.bumps))
        for b in self.bumps:
            dist = self.domain_radius - float(np.hypot(*b.center))
            if not dist > b.radius:
                raise AdmissibilityError(
                    f"bump at {b.center} with radius {b.radius} touches the "
                    f"boundary of the disc of radius {self.domain_radius}"
                )

    def support_radius(self) -> float:
        if not self.bumps:
            return 0.0
        return max(float(np.hypot(*b.center)) + b.radius for b in self.bumps)


def _bump_weights(b: Bump, x: float, y: float):
    """Values of w, w', w'', w''' at s = |x-c|^2/rho^2 for one bump.

    w(s) = exp(-1/(1-s)) for s < 1 and 0 otherwise; derivatives follow
    from the exponent E = -(1-s)^{-1} with E' = -(1-s)^{-2},
    E'' = -2(1-s)^{-3}, E''' = -6(1-s)^{-4}.
    """
    u = x - b.center[0]
    v = y - b.center[1]
    s = (u * u + v * v) / (b.radius * b.radius)
    if s >= 1.0:
        return u, v, 0.0, 0.0, 0.0, 0.0
    g = 1.0 / (1.0 - s)
    w = np.exp(-g)
    e1 = -g * g
    e2 = -2.0 * g ** 3
    e3 = -6.0 * g ** 4
    w1 = w * e1
    w2 = w * (e1 * e1 + e2)
    w3 = w * (e1 ** 3 + 3.0 * e1 * e2 + e3)
    return u, v, w, w1, w2, w3


def _second_partials(phi: AiryPotential, x: float, y: float):
    """(phi_xx, phi_xy, phi_yy) summed over bumps."""
    pxx = pxy = pyy = 0.0
    for b in phi.bumps:
        u, v, _, w1, w2, _ = _bump_weights(b, x, y)
        al = 2.0 / (b.radius * b.radius)
        scale = b.potential_scale
        pxx += scale * (w2 * al * al * u * u + w1 * al)
        pyy += scale * (w2 * al * al * v * v + w1 * al)
        pxy += scale * w2 * al * al * u * v
    return pxx, pxy, pyy


def _third_partials(phi: AiryPotential, x: float, y: float):
    """(phi_xxx, phi_xxy, phi_xyy, phi_yyy) summed over bumps."""
    p300 = p210 = p120 = p030 = 0.0
    for b in phi.bumps:
        u, v, _, _, w2, w3 = _bump_weights(b, x, y)
        al = 2.0 / (b.radius * b.radius)
        a2 = al * al
        a3 = a2 * al
        scale = b.potential_scale
        p300 += scale * (w3 * a3 * u ** 3 + 3.0 * w2 * a2 * u)
        p210 += scale * (w3 * a3 * u * u * v + w2 * a2 * v)
        p120 += scale * (w3 * a3 * u * v * v + w2 * a2 * u)
        p030 += scale * (w3 * a3 * v ** 3 + 3.0 * w2 * a2 * v)
    return p300, p210, p120, p030


@dataclass(frozen=True)
class ResidualStressField:
    """Symmetric, divergence-free matrix field with interior support.

    ``t(x)`` returns the symmetric 2x2 matrix (only the upper triangle is
    computed; the lower is mirrored, so symmetry holds exactly by
    storage) and ``grad_t(x)`` the array g[j, l, m] = d t_jl / d x_m of
    analytic first partials.  The field vanishes identically outside
    ``support_radius``.
    """

    dim: int
    t: Callable[[np.ndarray], np.ndarray]
    grad_t: Callable[[np.ndarray], np.ndarray]
    support_radius: float

    @staticmethod
    def zero(dim: int = 2) -> "ResidualStressField":
        z = np.zeros((dim, dim))
        gz = np.zeros((dim, dim, dim))
        return ResidualStressField(dim, lambda x: z, lambda x: gz, 0.0)

    def divergence(self, x: np.ndarray) -> np.ndarray:
        g = self.grad_t(x)
        return np.einsum("jll->j", g)


def airy_to_stress(phi: AiryPotential) -> ResidualStressField:
    """Stress field of a potential: T = [[p_yy, -p_xy], [-p_xy, p_xx]].

    Divergence freeness holds identically (equality of mixed partials),
    symmetry by storage, and the boundary traction vanishes because the
    field is exactly zero outside the bump balls.
    """

    def t_of(x: np.ndarray) -> np.ndarray:
        px, py = float(x[0]), float(x[1])
        pxx, pxy, pyy = _second_partials(phi, px, py)
        out = np.empty((2, 2))
        out[0, 0] = pyy
        out[0, 1] = out[1, 0] = -pxy
        out[1, 1] = pxx
        return out

    def grad_of(x: np.ndarray) -> np.ndarray:
        px, py = float(x[0]), float(x[1])
        p300, p210, p120, p030 = _third_partials(phi, px, py)
        g = np.empty((2, 2, 2))
        # t11 = p_yy: d/dx = p_xyy, d/dy = p_yyy
        g[0, 0] = (p120, p030)
        # t12 = -p_xy: d/dx = -p_xxy, d/dy = -p_xyy
        g[0, 1] = (-p210, -p120)
        g[1, 0] = g[0, 1]
        # t22 = p_xx
        g[1, 1] = (p300, p210)
        return g

    return ResidualStressField(2, t_of, grad_of, phi.support_radius())


@dataclass(frozen=True)
class AdmissibilityReport:
    symmetry_ok: bool
    divfree_max_residual: float
    boundary_traction_max: float
    min_convexity_over_samples: float

    @property
    def admissible(self) -> bool:
        return (
            self.symmetry_ok
            and self.divfree_max_residual <= 1e-8
            and self.boundary_traction_max == 0.0
            and self.min_convexity_over_samples > 0.0
        )


def verify_admissible(
    field: ResidualStressField,
    base: IsotropicModuli,
    domain_radius: float,
    n_samples: int = 40,
) -> AdmissibilityReport:
    """Sample-based admissibility report for a residual-stress field.

    Checks symmetry and analytic divergence on an n x n grid over the
    disc, the traction on boundary sample points, and the minimum
    convexity constant of the combined tensor over the samples.  Reports
    only; never raises.
    """
    coords = np.linspace(-domain_radius, domain_radius, n_samples)
    sym_ok = True
    div_max = 0.0
    min_conv = np.inf
    for px in coords:
        for py in coords:
            if px * px + py * py > domain_radius * domain_radius:
                continue
            x = np.array([px, py])
            t = field.t(x)
            if abs(t[0, 1] - t[1, 0]) > 0.0:
                sym_ok = False
            div_max = max(div_max, float(np.max(np.abs(field.divergence(x)))))
            c = make_isotropic_residual(base, t, field.dim)
            min_conv = min(min_conv, convexity_constant(c))
    bdry_max = 0.0
    for theta in np.linspace(0.0, 2.0 * np.pi, 4 * n_samples, endpoint=False):
        x = domain_radius * np.array([np.cos(theta), np.sin(theta)])
        nu = x / domain_radius
        bdry_max = max(bdry_max, float(np.max(np.abs(field.t(x) @ nu))))
    return AdmissibilityReport(sym_ok, div_max, bdry_max, float(min_conv))


def default_bump_field(
    mu0: float = 1.0,
    amplitude_factor: float = 0.1,
    center: Tuple[float, float] = (0.5, 0.0),
    radius: float = 0.3,
    domain_radius: float = 2.0,
) -> ResidualStressField:
    """The one-bump field used by the experiments, amplitude 0.1*mu0."""
    phi = AiryPotential(
        (Bump(center, radius, amplitude_factor * mu0),), domain_radius
    )
    return airy_to_stress(phi)
