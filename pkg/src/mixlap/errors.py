"""Exception types shared across the package."""


class MixlapError(Exception):
    """Base class for all package errors."""


class InvalidGeometry(MixlapError):
    """Grid construction parameters are inconsistent."""


class LevelTooCoarse(MixlapError):
    """Cutoff level has an empty plateau on this domain."""


class LevelTooFine(MixlapError):
    """Cutoff level cannot be resolved by the mesh (2^-j < 4*h)."""


class DomainError(MixlapError):
    """Argument outside the mathematical domain of an operation."""


class GridMismatch(MixlapError):
    """Operator and grid function were built on different grids."""


class WindowTooThin(MixlapError):
    """Fewer than the required number of nodes per tested dyadic layer."""


class CalibrationFailed(MixlapError):
    """Coefficient ladder exhausted without achieving the required sign."""


class OutOfWindow(MixlapError):
    """(sigma, p) or related parameters outside the admissible window."""


class NonIntegrableWeight(MixlapError):
    """Weighted norm requested for a non-integrable weight/function pair."""


class AliasingDetected(MixlapError):
    """Spectral box-doubling check failed; periodization is unreliable."""


class MaxIterExceeded(MixlapError):
    """Fixed-point iteration did not reach tolerance within the budget."""


class Diverged(MixlapError):
    """Fixed-point iteration diverged (expected in supercritical stress tests)."""


class MonotonicityViolation(MixlapError):
    """A sequence required to be monotone was not (discretization artifact)."""


class ConfigError(MixlapError):
    """Experiment configuration failed to parse or validate."""


class ExperimentFailure(MixlapError):
    """An experiment ran but an asserted verdict failed.

    Raised by run_config after all outputs are written; carries the report
    bundle so callers can inspect the failing verdicts.
    """

    def __init__(self, message, bundle=None):
        super().__init__(message)
        self.bundle = bundle
