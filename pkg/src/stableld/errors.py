"""Exception types shared across the package."""

from __future__ import annotations


class StableLDError(Exception):
    """Base class for all package errors."""


class DomainError(StableLDError, ValueError):
    """An argument lies outside the domain of an evaluator."""


class UnsupportedCase(StableLDError, ValueError):
    """The requested parameter regime is not covered (currently alpha = 1)."""


class NumericError(StableLDError, ArithmeticError):
    """A solver or quadrature did not reach its tolerance.

    Parameters
    ----------
    message : str
        Description of the failure.
    residual : float, optional
        Last residual or error estimate seen by the routine.
    """

    def __init__(self, message: str, residual: float | None = None):
        super().__init__(message)
        self.residual = residual


class InsufficientSamples(StableLDError):
    """The a priori expected number of tail hits is below the gate.

    Attributes
    ----------
    expected_hits : float
        Expected hit count at the requested sample size.
    required_samples : int
        Smallest sample size reaching the gate.
    """

    def __init__(self, expected_hits: float, required_samples: int, gate: int = 100):
        super().__init__(
            f"expected {expected_hits:.3g} tail hits < {gate}; "
            f"need at least {required_samples} samples"
        )
        self.expected_hits = expected_hits
        self.required_samples = required_samples


class OrbitDegenerate(StableLDError):
    """An orbit landed on a partition endpoint."""


class SpectralDegeneracy(StableLDError):
    """Power iteration failed to converge or the spectral gap collapsed."""


class ResourceError(StableLDError, MemoryError):
    """A requested discretization exceeds the memory budget."""


class ModelMismatch(StableLDError):
    """Observed data are incompatible with a regularly varying tail."""


class FitDegenerate(StableLDError):
    """A regression has too few points or no spread in the regressor."""
