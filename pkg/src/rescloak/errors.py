"""Exception hierarchy shared across the package."""


class RescloakError(Exception):
    """Base class for all package errors."""


class AdmissibilityError(RescloakError):
    """A physical parameter violates an admissibility condition."""


class DomainError(RescloakError):
    """A point lies outside the domain of a map or kernel."""


class OrientationError(RescloakError):
    """A Jacobian is not orientation-preserving (det <= 0)."""


class RefinementError(RescloakError):
    """Mesh parameters cannot resolve the requested geometry."""


class AssemblyError(RescloakError):
    """Invalid coefficient data encountered during FEM assembly."""


class ResonanceSuspectedError(RescloakError):
    """The factorized system is numerically singular.

    Carries the smallest-to-largest pivot magnitude ratio of the LU
    factorization, which signals that -kappa^2 sits near a discrete
    eigenvalue of the operator.
    """

    def __init__(self, message: str, pivot_ratio: float):
        super().__init__(message)
        self.pivot_ratio = pivot_ratio


class ConfigError(RescloakError):
    """Invalid experiment configuration."""


class SolverError(RescloakError):
    """Linear solve failed or produced an unacceptable residual."""
