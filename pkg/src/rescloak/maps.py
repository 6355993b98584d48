"""Radial blow-up maps, their Jacobians, and tensor/density push-forward.

The geometry is the concentric-disc setup: the outer disc has radius 2,
the singular map inflates the origin to the unit disc, and the
regularized map inflates the disc of radius h instead.  Both maps are
the identity on the outer circle, which is what makes boundary
measurements transform trivially.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Optional

import numpy as np

from .errors import AdmissibilityError, DomainError, OrientationError
from .tensors import ElasticTensor4

__all__ = [
    "RadialMap",
    "JacobianSample",
    "f0",
    "fh",
    "fh_inverse",
    "jacobian",
    "push_forward_tensor",
    "push_forward_density",
    "polar_cloak_entries",
    "rotate_tensor",
    "POLAR_ENTRY_KEYS",
]

OUTER_RADIUS = 2.0


@dataclass(frozen=True)
class RadialMap:
    """A radial map of the disc of radius 2.

    kind is "blowup" (origin inflated to the unit disc, evaluable for
    0 < |x| <= 2 only) or "regularized" (bijective on the disc, with the
    inner disc of radius h scaled up to the unit disc); the regularized
    kind carries its parameter h in (0, 1).
    """

    kind: str
    h: Optional[float] = None
    outer_radius: float = OUTER_RADIUS

    def __post_init__(self):
        if self.kind not in ("blowup", "regularized"):
            raise AdmissibilityError(f"unknown map kind {self.kind!r}")
        if self.kind == "regularized":
            if self.h is None or not (0.0 < self.h < 1.0):
                raise AdmissibilityError("regularized map needs h in (0, 1)")
        elif self.h is not None:
            raise AdmissibilityError("blowup map takes no h parameter")


@dataclass(frozen=True)
class JacobianSample:
    """Jacobian matrix M = d(new x)/d(old x) at a point, with det M."""

    M: np.ndarray
    det: float

    def __post_init__(self):
        m = np.asarray(self.M, dtype=float)
        object.__setattr__(self, "M", m)
        ref = float(np.linalg.det(m))
        if abs(self.det - ref) > 1e-12 * max(1.0, abs(ref)):
            raise AdmissibilityError(
                f"stored det {self.det} disagrees with det(M) = {ref}"
            )


def _radius(x: np.ndarray) -> float:
    return float(np.linalg.norm(x))


def f0(x: np.ndarray) -> np.ndarray:
    """Singular blow-up: x -> (1 + |x|/2) x/|x|, for 0 < |x| <= 2."""
    x = np.asarray(x, dtype=float)
    s = _radius(x)
    if s == 0.0:
        raise DomainError("blow-up map is singular at the origin")
    if s > OUTER_RADIUS + 1e-12:
        raise DomainError(f"|x| = {s} outside the disc of radius 2")
    return (1.0 + s / 2.0) * x / s


def _check_h(h: float) -> None:
    if not (0.0 < h < 1.0):
        raise AdmissibilityError(f"h must lie in (0, 1), got {h}")


def fh(x: np.ndarray, h: float) -> np.ndarray:
    """Regularized map: dilate the disc of radius h to the unit disc.

    For h <= |x| <= 2 the radius maps affinely onto [1, 2]; for |x| < h
    the map is x/h.  Identity on the outer circle.
    """
    _check_h(h)
    x = np.asarray(x, dtype=float)
    s = _radius(x)
    if s > OUTER_RADIUS + 1e-12:
        raise DomainError(f"|x| = {s} outside the disc of radius 2")
    if s < h:
        return x / h
    return ((2.0 - 2.0 * h) / (2.0 - h) + s / (2.0 - h)) * x / s


def fh_inverse(y: np.ndarray, h: float) -> np.ndarray:
    """Exact analytic inverse of :func:`fh`."""
    _check_h(h)
    y = np.asarray(y, dtype=float)
    r = _radius(y)
    if r > OUTER_RADIUS + 1e-12:
        raise DomainError(f"|y| = {r} outside the disc of radius 2")
    if r < 1.0:
        return h * y
    s = (2.0 - h) * r - (2.0 - 2.0 * h)
    return s * y / r


def jacobian(radial_map: RadialMap, x: np.ndarray) -> JacobianSample:
    """Analytic Jacobian of a radial map at x.

    A radial map x -> R(s) x/s with s = |x| has Jacobian
    R'(s) rr^T + (R(s)/s)(I - rr^T) in the frame of the unit radial
    vector r, hence det = R'(s) (R(s)/s)^(N-1).  At the kink |x| = h of
    the regularized map the outer branch is used.
    """
    x = np.asarray(x, dtype=float)
    s = _radius(x)
    n = x.size
    if radial_map.kind == "blowup":
        if s == 0.0:
            raise DomainError("blow-up Jacobian undefined at the origin")
        rp = 0.5
        ratio = (1.0 + s / 2.0) / s
    else:
        h = radial_map.h
        if s < h:
            m = np.eye(n) / h
            return JacobianSample(m, float(h ** (-n)))
        rp = 1.0 / (2.0 - h)
        ratio = ((2.0 - 2.0 * h) / (2.0 - h) + s / (2.0 - h)) / s
    rhat = x / s
    proj = np.outer(rhat, rhat)
    m = rp * proj + ratio * (np.eye(n) - proj)
    det = rp * ratio ** (n - 1)
    return JacobianSample(m, float(det))


def push_forward_tensor(c: ElasticTensor4, sample: JacobianSample) -> ElasticTensor4:
    """Push a rank-4 tensor forward through a Jacobian.

    New entries are (1/det M) * sum_{j,l} C_ijkl M_pl M_qj placed at
    [i, q, k, p]: the Jacobian acts on the two derivative slots, which is
    exactly the transformation making solutions correspond under change
    of coordinates.  Major symmetry of the input is preserved.
    """
    if sample.det <= 0.0:
        raise OrientationError(f"push-forward needs det M > 0, got {sample.det}")
    m = sample.M
    out = np.einsum("ijkl,pl,qj->iqkp", c.entries, m, m) / sample.det
    return ElasticTensor4(c.dim, out)


def push_forward_density(rho: complex, sample: JacobianSample) -> complex:
    """Density transforms as rho / det M."""
    if sample.det <= 0.0:
        raise OrientationError(f"push-forward needs det M > 0, got {sample.det}")
    return rho / sample.det


def rotate_tensor(c: ElasticTensor4, theta: float) -> ElasticTensor4:
    """Express a tensor in the rotated frame at angle theta.

    The returned entries are the components with respect to the
    orthonormal frame (e_r, e_theta) at polar angle theta, obtained by
    conjugating every slot with the rotation matrix whose columns are
    those frame vectors.
    """
    ct, st = np.cos(theta), np.sin(theta)
    rot = np.array([[ct, -st], [st, ct]])
    out = np.einsum("ijkl,ia,jb,kc,ld->abcd", c.entries, rot, rot, rot, rot)
    return ElasticTensor4(c.dim, out)


# The twelve slots of the transformed tensor that are nonzero for an
# isotropic-plus-residual background; keys use r/t for radial/tangential.
POLAR_ENTRY_KEYS = (
    "rrrr",
    "trtr",
    "rrrt",
    "rtrr",
    "trtt",
    "tttr",
    "rrtt",
    "ttrr",
    "rttr",
    "trrt",
    "rtrt",
    "tttt",
)


def polar_cloak_entries(
    r: float, lam0: float, mu0: float, t_polar: np.ndarray
) -> Dict[str, float]:
    """Closed-form entries of the blown-up medium in the polar frame.

    ``r`` is the image radius in (1, 2) and ``t_polar`` holds the
    residual-stress components in the (radial, tangential) frame at the
    preimage point.  These are the twelve nontrivial entries of the
    push-forward of the isotropic-plus-residual tensor through the
    singular blow-up, written against the same frame; the radial normal
    stiffnesses carry the factor (r-1)/r and therefore degenerate on the
    unit circle, while the tangential ones carry r/(r-1) and blow up
    there.
    """
    if not (1.0 < r < 2.0):
        raise DomainError(f"image radius must lie in (1, 2), got {r}")
    t = np.asarray(t_polar, dtype=float)
    if t.shape != (2, 2) or abs(t[0, 1] - t[1, 0]) > 1e-12 * max(
        1.0, float(np.max(np.abs(t)))
    ):
        raise AdmissibilityError("t_polar must be a symmetric 2x2 matrix")
    t11, t22, t12 = t[0, 0], t[1, 1], t[0, 1]
    shrink = (r - 1.0) / r
    stretch = r / (r - 1.0)
    return {
        "rrrr": (lam0 + 2.0 * mu0 + t11) * shrink,
        "trtr": (mu0 + t11) * shrink,
        "rrrt": t12,
        "rtrr": t12,
        "trtt": t12,
        "tttr": t12,
        "rrtt": lam0,
        "ttrr": lam0,
        "rttr": mu0,
        "trrt": mu0,
        "rtrt": (mu0 + t22) * stretch,
        "tttt": (lam0 + 2.0 * mu0 + t22) * stretch,
    }
