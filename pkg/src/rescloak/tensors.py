"""Rank-4 elasticity tensor algebra with residual stress.

Tensor entries follow the convention ``C[i, j, k, l]`` where ``(i, j)``
pairs a displacement component with a derivative direction on the test
side and ``(k, l)`` does the same on the trial side.  An isotropic tensor
augmented by a symmetric matrix field ``T`` as ``t_jl * delta_ik`` keeps
the major symmetry ``C_ijkl == C_klij`` while breaking the minor one
(``C_ijkl != C_jikl``), which is what makes the system form-invariant
under coordinate changes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Tuple

import numpy as np

from .errors import AdmissibilityError

__all__ = [
    "ElasticTensor4",
    "IsotropicModuli",
    "VoigtMatrix",
    "make_isotropic_residual",
    "to_voigt",
    "from_voigt",
    "convexity_constant",
    "check_symmetries",
    "MAJOR_SYMMETRY_RTOL",
]

# Relative tolerance used by all symmetry classifications; relative so that
# floating-point tensor transforms do not flip the verdict.
MAJOR_SYMMETRY_RTOL = 1e-12

# Voigt pair ordering: (11, 22, 12) in 2D and (11, 22, 33, 23, 13, 12) in 3D.
_VOIGT_PAIRS = {
    2: ((0, 0), (1, 1), (0, 1)),
    3: ((0, 0), (1, 1), (2, 2), (1, 2), (0, 2), (0, 1)),
}


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=float)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class ElasticTensor4:
    """Rank-4 elasticity tensor in dimension 2 or 3.

    No symmetry is enforced at construction time: classification is the
    job of :func:`check_symmetries`, and several tests need deliberately
    broken inputs.
    """

    dim: int
    entries: np.ndarray

    def __post_init__(self):
        if self.dim not in (2, 3):
            raise AdmissibilityError(f"dim must be 2 or 3, got {self.dim}")
        a = np.asarray(self.entries, dtype=float)
        if a.shape != (self.dim,) * 4:
            raise AdmissibilityError(
                f"entries must have shape {(self.dim,) * 4}, got {a.shape}"
            )
        object.__setattr__(self, "entries", _readonly(a))

    def __getitem__(self, idx):
        return self.entries[idx]

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.entries)))


@dataclass(frozen=True)
class IsotropicModuli:
    """Lame parameters (lam, mu) of an isotropic background.

    ``min_convexity_bound(dim)`` returns min(mu, dim*lam + 2*mu), the
    constant whose positivity certifies strong convexity of the plain
    isotropic tensor.
    """

    lam: float
    mu: float

    def min_convexity_bound(self, dim: int) -> float:
        return min(self.mu, dim * self.lam + 2.0 * self.mu)

    def require_convex(self, dim: int, c0: float = 0.0) -> None:
        bound = self.min_convexity_bound(dim)
        if not bound > c0:
            raise AdmissibilityError(
                f"moduli (lam={self.lam}, mu={self.mu}) fail strong convexity: "
                f"min(mu, {dim}*lam+2*mu) = {bound} <= {c0}"
            )


@dataclass(frozen=True)
class VoigtMatrix:
    """Contracted matrix form of a major-symmetric rank-4 tensor."""

    dim: int
    m: np.ndarray

    def __post_init__(self):
        if self.dim not in (2, 3):
            raise AdmissibilityError(f"dim must be 2 or 3, got {self.dim}")
        n = 3 if self.dim == 2 else 6
        a = np.asarray(self.m, dtype=float)
        if a.shape != (n, n):
            raise AdmissibilityError(f"m must have shape {(n, n)}, got {a.shape}")
        object.__setattr__(self, "m", _readonly(a))


def make_isotropic_residual(
    moduli: IsotropicModuli, t_at_x: np.ndarray, dim: int
) -> ElasticTensor4:
    """Isotropic tensor plus the residual-stress term ``t_jl * delta_ik``.

    C_ijkl = lam d_ij d_kl + mu (d_ik d_jl + d_il d_jk) + t_jl d_ik.
    """
    if dim not in (2, 3):
        raise AdmissibilityError(f"dim must be 2 or 3, got {dim}")
    t = np.asarray(t_at_x, dtype=float)
    if t.shape != (dim, dim):
        raise AdmissibilityError(f"T must be {dim}x{dim}, got {t.shape}")
    scale = max(1.0, float(np.max(np.abs(t))))
    if np.max(np.abs(t - t.T)) > 1e-12 * scale:
        raise AdmissibilityError("residual stress matrix must be symmetric")
    eye = np.eye(dim)
    c = (
        moduli.lam * np.einsum("ij,kl->ijkl", eye, eye)
        + moduli.mu
        * (np.einsum("ik,jl->ijkl", eye, eye) + np.einsum("il,jk->ijkl", eye, eye))
        + np.einsum("jl,ik->ijkl", t, eye)
    )
    return ElasticTensor4(dim, c)


def check_symmetries(c: ElasticTensor4) -> Tuple[bool, bool]:
    """Classify (major, minor) symmetry with a relative tolerance.

    major: C_ijkl == C_klij, minor: C_ijkl == C_jikl; the tolerance is
    ``MAJOR_SYMMETRY_RTOL * max|C|``. The zero tensor passes both.
    """
    a = c.entries
    scale = c.max_abs()
    tol = MAJOR_SYMMETRY_RTOL * scale
    major = float(np.max(np.abs(a - a.transpose(2, 3, 0, 1)))) <= tol
    minor = float(np.max(np.abs(a - a.transpose(1, 0, 2, 3)))) <= tol
    return major, minor


def _symmetric_basis(dim: int) -> np.ndarray:
    """Orthonormal (Frobenius) basis of symmetric dim x dim matrices."""
    basis = []
    for i in range(dim):
        e = np.zeros((dim, dim))
        e[i, i] = 1.0
        basis.append(e)
    inv_sqrt2 = 1.0 / np.sqrt(2.0)
    for i in range(dim):
        for j in range(i + 1, dim):
            e = np.zeros((dim, dim))
            e[i, j] = e[j, i] = inv_sqrt2
            basis.append(e)
    return np.stack(basis)


def convexity_constant(c: ElasticTensor4) -> float:
    """Smallest value of the quadratic form over unit symmetric strains.

    The form eps -> sum C_ijkl eps_ij eps_kl is restricted to symmetric
    matrices (dimension 3 for N=2, 6 for N=3) and the minimum over the
    unit Frobenius sphere is the smallest eigenvalue of the restricted
    form.  A positive return value certifies strong convexity.
    """
    basis = _symmetric_basis(c.dim)
    q = np.einsum("ijkl,aij,bkl->ab", c.entries, basis, basis)
    q = 0.5 * (q + q.T)
    return float(np.linalg.eigvalsh(q)[0])


def to_voigt(c: ElasticTensor4) -> VoigtMatrix:
    """Contract a major-symmetric tensor to its Voigt matrix.

    Diagonal pairs map to the single entry and a diagonal/off-diagonal
    slot sums the two orders of the off-diagonal pair.  Between two
    off-diagonal pairs the four index orders combine with weights
    (1, -1/2, -1/2, 1) when the pairs coincide and sum plainly when they
    differ (where the isotropic part vanishes anyway).  This is the
    symmetric linear contraction that sends the plain isotropic tensor
    to the classical stiffness matrix while keeping the residual-stress
    block faithful; no engineering factor-of-2 scaling anywhere.
    """
    pairs = _VOIGT_PAIRS[c.dim]
    a = c.entries
    n = len(pairs)
    m = np.empty((n, n))
    for p, (i, j) in enumerate(pairs):
        for q, (k, l) in enumerate(pairs):
            if i == j and k == l:
                m[p, q] = a[i, j, k, l]
            elif i == j:
                m[p, q] = a[i, j, k, l] + a[i, j, l, k]
            elif k == l:
                m[p, q] = a[i, j, k, l] + a[j, i, k, l]
            elif (i, j) == (k, l):
                m[p, q] = (
                    a[i, j, k, l]
                    + a[j, i, l, k]
                    - 0.5 * (a[j, i, k, l] + a[i, j, l, k])
                )
            else:
                m[p, q] = (
                    a[i, j, k, l] + a[j, i, k, l] + a[i, j, l, k] + a[j, i, l, k]
                )
    return VoigtMatrix(c.dim, m)


def from_voigt(v: VoigtMatrix) -> ElasticTensor4:
    """Invert :func:`to_voigt` on the isotropic-plus-residual family.

    The contraction is only injective on tensors of the form produced by
    :func:`make_isotropic_residual`; this decodes (lam, mu, T) from the
    matrix and rebuilds the tensor.  For matrices outside that image the
    result is the family member with the same Voigt image.
    """
    m = v.m
    if v.dim == 2:
        lam = m[0, 1]
        t12 = 0.5 * (m[0, 2] + m[1, 2])
        a = m[0, 0] - lam
        b = m[1, 1] - lam
        mu = (a + b - m[2, 2]) / 3.0
        t = np.array([[a - 2.0 * mu, t12], [t12, b - 2.0 * mu]])
    else:
        lam = (m[0, 1] + m[0, 2] + m[1, 2]) / 3.0
        diag = np.array([m[0, 0], m[1, 1], m[2, 2]]) - lam
        off = m[3, 3] + m[4, 4] + m[5, 5]
        mu = (2.0 * diag.sum() - off) / 9.0
        tdiag = diag - 2.0 * mu
        t23 = (m[1, 3] + m[2, 3] + m[4, 5]) / 3.0
        t13 = (m[0, 4] + m[2, 4] + m[3, 5]) / 3.0
        t12 = (m[0, 5] + m[1, 5] + m[3, 4]) / 3.0
        t = np.array(
            [
                [tdiag[0], t12, t13],
                [t12, tdiag[1], t23],
                [t13, t23, tdiag[2]],
            ]
        )
    return make_isotropic_residual(IsotropicModuli(float(lam), float(mu)), t, v.dim)
