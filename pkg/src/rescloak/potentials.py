"""Fundamental solutions and layer potentials of the time-harmonic
isotropic (Lame) operator.

The matrix kernel is built from Helmholtz fundamental solutions at the
compressional and shear wavenumbers; its columns solve the Navier
equation away from the source point.  Layer potentials are evaluated
off-boundary only, by trapezoidal quadrature on a circle, which is
spectrally accurate for smooth densities.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np

from .errors import AdmissibilityError, DomainError
from .hankel import hankel1_pair

__all__ = [
    "LameKernelParams",
    "fundamental_scalar",
    "kupradze_tensor",
    "single_layer_eval",
    "double_layer_eval",
]


@dataclass(frozen=True)
class LameKernelParams:
    """Moduli and frequency with derived wavenumbers.

    kp = eta / sqrt(lam + 2 mu) and ks = eta / sqrt(mu); kp < ks holds
    whenever lam > -mu (compressional waves travel faster).
    """

    lam: float
    mu: float
    eta: float
    kp: float = field(init=False)
    ks: float = field(init=False)

    def __post_init__(self):
        if self.mu <= 0.0 or self.lam + 2.0 * self.mu <= 0.0:
            raise AdmissibilityError(
                f"need mu > 0 and lam + 2 mu > 0, got lam={self.lam}, mu={self.mu}"
            )
        if self.eta <= 0.0:
            raise AdmissibilityError(f"eta must be positive, got {self.eta}")
        object.__setattr__(self, "kp", self.eta / np.sqrt(self.lam + 2.0 * self.mu))
        object.__setattr__(self, "ks", self.eta / np.sqrt(self.mu))


def fundamental_scalar(x: np.ndarray, y: np.ndarray, k: float, dim: int) -> complex:
    """Outgoing Helmholtz fundamental solution G_k(x, y).

    (i/4) H0(k|x-y|) in 2D and exp(ik|x-y|)/(4 pi |x-y|) in 3D.
    """
    if dim not in (2, 3):
        raise DomainError(f"dim must be 2 or 3, got {dim}")
    if k <= 0.0:
        raise DomainError(f"wavenumber must be positive, got {k}")
    r = float(np.linalg.norm(np.asarray(x, float) - np.asarray(y, float)))
    if r == 0.0:
        raise DomainError("fundamental solution is singular at x = y")
    if dim == 2:
        return 0.25j * hankel1_pair(k * r)[0]
    return np.exp(1j * k * r) / (4.0 * np.pi * r)


def _g_derivs(r: float, k: float, dim: int):
    """(G, G', G'', G''') of the radial Helmholtz kernel at distance r."""
    if dim == 2:
        z = k * r
        h0, h1 = hankel1_pair(z)
        g0 = 0.25j * h0
        g1 = -0.25j * k * h1
        g2 = -0.25j * k * k * (h0 - h1 / z)
        g3 = -0.25j * k ** 3 * (-h1 - h0 / z + 2.0 * h1 / (z * z))
        return g0, g1, g2, g3
    e = np.exp(1j * k * r) / (4.0 * np.pi)
    g0 = e / r
    g1 = e * (1j * k * r - 1.0) / r ** 2
    g2 = e * (-(k * r) ** 2 - 2j * k * r + 2.0) / r ** 3
    g3 = e * (-1j * (k * r) ** 3 + 3.0 * (k * r) ** 2 + 6j * k * r - 6.0) / r ** 4
    return g0, g1, g2, g3


def kupradze_tensor(
    x: np.ndarray, y: np.ndarray, params: LameKernelParams, dim: int = 2
) -> np.ndarray:
    """Matrix fundamental solution of the Navier operator.

    (1/mu) G_ks I + (1/eta^2) grad grad^T [G_ks - G_kp], with the second
    derivative block computed from the analytic radial derivatives: for a
    radial f, grad grad^T f = f'' rr^T + (f'/r)(I - rr^T).
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    d = x - y
    r = float(np.linalg.norm(d))
    if r == 0.0:
        raise DomainError("Kupradze tensor is singular at x = y")
    rhat = d / r
    _, gs1, gs2, _ = _g_derivs(r, params.ks, dim)
    _, gp1, gp2, _ = _g_derivs(r, params.kp, dim)
    gks = fundamental_scalar(x, y, params.ks, dim)
    a = gs2 - gp2
    b = (gs1 - gp1) / r
    eye = np.eye(dim)
    proj = np.outer(rhat, rhat)
    return (gks / params.mu) * eye + (a * proj + b * (eye - proj)) / params.eta ** 2


def _grad_kupradze_x(
    x: np.ndarray, y: np.ndarray, params: LameKernelParams
) -> np.ndarray:
    """d Pi_ki / d x_l as an array [k, i, l], 2D."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    d = x - y
    r = float(np.linalg.norm(d))
    if r == 0.0:
        raise DomainError("kernel gradient is singular at x = y")
    rhat = d / r
    gs0, gs1, gs2, gs3 = _g_derivs(r, params.ks, 2)
    gp0, gp1, gp2, gp3 = _g_derivs(r, params.kp, 2)
    a = gs2 - gp2
    ap = gs3 - gp3
    b = (gs1 - gp1) / r
    bp = (gs2 - gp2) / r - (gs1 - gp1) / r ** 2
    eye = np.eye(2)
    # dr/dx_l = rhat_l, d rhat_k / d x_l = (delta_kl - rhat_k rhat_l)/r
    drh = (eye - np.outer(rhat, rhat)) / r  # [k, l]
    grad = np.zeros((2, 2, 2), dtype=complex)
    for k in range(2):
        for i in range(2):
            for l in range(2):
                sym = drh[k, l] * rhat[i] + rhat[k] * drh[i, l]
                val = gs1 * rhat[l] * eye[k, i] / params.mu
                val += (
                    ap * rhat[l] * rhat[k] * rhat[i]
                    + a * sym
                    + bp * rhat[l] * (eye[k, i] - rhat[k] * rhat[i])
                    - b * sym
                ) / params.eta ** 2
                grad[k, i, l] = val
    return grad


def traction_kernel(
    x: np.ndarray, y: np.ndarray, nu: np.ndarray, params: LameKernelParams
) -> np.ndarray:
    """Double-layer kernel: row i is the boundary traction at y, with
    normal nu, of the field z -> Pi(x, z) e_i."""
    dpi_x = _grad_kupradze_x(y, x, params)  # d/dz Pi_ki(z, x) at z = y
    # Pi(z, x) = Pi(x, z), so dpi_x[k, i, l] = d/dy_l Pi_ki(x, y)
    div_w = np.einsum("kik->i", dpi_x)
    xi = np.zeros((2, 2), dtype=complex)
    for i in range(2):
        for j in range(2):
            xi[i, j] = params.lam * nu[j] * div_w[i] + params.mu * np.dot(
                nu, dpi_x[j, i, :] + dpi_x[:, i, j]
            )
    return xi


Density = Union[Callable[[float], np.ndarray], np.ndarray]


def _circle_nodes(n_quad: int, radius: float):
    theta = 2.0 * np.pi * np.arange(n_quad) / n_quad
    pts = radius * np.stack([np.cos(theta), np.sin(theta)], axis=1)
    w = 2.0 * np.pi * radius / n_quad
    return theta, pts, w


def _density_values(density: Density, theta: np.ndarray) -> np.ndarray:
    if callable(density):
        return np.array([np.asarray(density(t), dtype=complex) for t in theta])
    vals = np.asarray(density, dtype=complex)
    if vals.shape != (theta.size, 2):
        raise AdmissibilityError(
            f"density array must have shape {(theta.size, 2)}, got {vals.shape}"
        )
    return vals


def _check_target(x: np.ndarray, radius: float, n_quad: int) -> None:
    gap = abs(float(np.linalg.norm(x)) - radius)
    spacing = 2.0 * np.pi * radius / n_quad
    if gap < 3.0 * spacing:
        raise DomainError(
            f"target at distance {gap:.3g} from the layer needs >= 3 quadrature "
            f"spacings ({3 * spacing:.3g}); raise n_quad or move the point"
        )


def single_layer_eval(
    density: Density,
    x: np.ndarray,
    params: LameKernelParams,
    n_quad: int,
    radius: float = 1.0,
) -> np.ndarray:
    """Single-layer potential on the circle of given radius, at x off it."""
    x = np.asarray(x, dtype=float)
    _check_target(x, radius, n_quad)
    theta, pts, w = _circle_nodes(n_quad, radius)
    vals = _density_values(density, theta)
    out = np.zeros(2, dtype=complex)
    for p, v in zip(pts, vals):
        out += kupradze_tensor(x, p, params, 2) @ v
    return w * out


def double_layer_eval(
    density: Density,
    x: np.ndarray,
    params: LameKernelParams,
    n_quad: int,
    radius: float = 1.0,
) -> np.ndarray:
    """Double-layer potential on the circle, with outward normals."""
    x = np.asarray(x, dtype=float)
    _check_target(x, radius, n_quad)
    theta, pts, w = _circle_nodes(n_quad, radius)
    vals = _density_values(density, theta)
    out = np.zeros(2, dtype=complex)
    for p, v in zip(pts, vals):
        nu = p / radius
        out += traction_kernel(x, p, nu, params) @ v
    return w * out
