"""Transformation-based near-cloaks for 2D elasticity with residual stress."""

from .tensors import (
    ElasticTensor4,
    IsotropicModuli,
    VoigtMatrix,
    make_isotropic_residual,
    to_voigt,
    from_voigt,
    convexity_constant,
    check_symmetries,
)
from .maps import (
    RadialMap,
    JacobianSample,
    f0,
    fh,
    fh_inverse,
    jacobian,
    push_forward_tensor,
    push_forward_density,
    polar_cloak_entries,
    rotate_tensor,
)

__version__ = "0.1.0"
