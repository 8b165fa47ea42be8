"""Exception hierarchy shared by all modules.

Every error raised on purpose by the library derives from `DipoleVacuumError`,
so callers (and the CLI) can separate configuration mistakes from numerical
failures without string matching.
"""


class DipoleVacuumError(Exception):
    """Base class for library errors."""


class ConfigError(DipoleVacuumError, ValueError):
    """Invalid user-supplied configuration or parameters."""


class DomainError(DipoleVacuumError, ValueError):
    """Argument outside the domain of a formula (pole hit, non-positive radius...)."""


class SingularMediumError(DomainError):
    """Maxwell-Garnett denominator vanishes."""


class EmptyMediumError(DomainError):
    """Quantity undefined for an empty medium (rho * alpha = 0)."""


class ResonanceSingularityError(DomainError):
    """Renormalization denominator vanishes."""


class NumericalError(DipoleVacuumError, ArithmeticError):
    """Base class for numerical failures."""


class QuadratureError(NumericalError):
    """Adaptive quadrature did not reach the requested tolerance."""

    def __init__(self, message, estimate=None, error=None):
        super().__init__(message)
        self.estimate = estimate
        self.error = error


class RegularizationError(NumericalError):
    """Integrand does not decay; the model needs a cutoff or decorrelation."""


class CutoffError(NumericalError):
    """Spectral integrand has not decayed at the requested cutoff."""

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class BranchError(NumericalError):
    """Phase of a logarithm jumps between adjacent grid points."""


class ContinuationError(NumericalError):
    """Analytic continuation to complex wavenumber failed."""


class NoResonanceError(NumericalError):
    """No root of the resonance equation inside the bracket."""


class FixedPointError(NumericalError):
    """Self-consistent iteration did not converge."""

    def __init__(self, message, history=None):
        super().__init__(message)
        self.history = list(history or [])


class IncompleteRootsError(NumericalError):
    """Argument-principle count differs from the number of converged roots."""

    def __init__(self, message, expected=None, found=None):
        super().__init__(message)
        self.expected = expected
        self.found = list(found or [])


class ResonantClusterError(NumericalError):
    """Coupled-dipole matrix is singular or ill-conditioned."""


class DensityTooHighError(NumericalError):
    """Random sequential addition could not place all dipoles."""


class EnsembleQualityError(NumericalError):
    """Too many failed configurations in an ensemble."""


class InternalConsistencyError(NumericalError):
    """Two evaluation routes of the same quantity disagree."""


class ComparisonInvalidError(DipoleVacuumError, ValueError):
    """Simulation and analytic prediction refer to different parameters."""
