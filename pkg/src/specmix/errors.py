"""Exception hierarchy shared across the package.

Two broad families matter to callers: data/argument validation problems
(bad signals, malformed inputs) and numeric failures raised while a
computation is in flight.  The CLI maps them to distinct exit codes.
"""


class SpecmixError(Exception):
    """Base class for all package errors."""


class DataValidationError(SpecmixError):
    """Invalid input data or arguments."""


class NumericError(SpecmixError):
    """A computation could not be carried out numerically."""


class ZeroVarianceSignal(DataValidationError):
    """Signal is constant; it cannot be standardized."""


class TooShortSignal(DataValidationError):
    """Signal has fewer samples than the minimum supported length."""


class GridMismatch(DataValidationError):
    """Two curves/periodograms expected to share a frequency grid do not."""


class NonPositiveModel(NumericError):
    """A model spectral curve has a non-positive ordinate."""


class InvalidComponent(DataValidationError):
    """AR(2) kernel parameters outside the admissible region."""


class RealRoots(DataValidationError):
    """AR(2) coefficients with real characteristic roots."""


class NonCausal(DataValidationError):
    """AR(2) coefficients outside the causal region."""


class InvalidState(DataValidationError):
    """Sampler state violating a structural invariant."""


class AtTruncationLimit(SpecmixError):
    """Birth move attempted while at the stick-breaking truncation level."""


class SingleComponent(SpecmixError):
    """Death move attempted with a single active component."""


class EmptyCell(DataValidationError):
    """A (condition, phase) cell required by the contrast pipeline is empty."""


class BandNotFound(NumericError):
    """A peak band never falls below its threshold inside the grid."""
