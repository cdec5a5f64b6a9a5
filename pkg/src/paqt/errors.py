"""Exception types shared across the package."""


class PaqtError(Exception):
    """Base class for package-specific errors."""


class InconsistentInputsError(PaqtError, ValueError):
    """Inputs that are individually valid but mutually contradictory."""


class DegenerateInputError(PaqtError, ValueError):
    """Input too degenerate for the operation to return a meaningful result."""


class DegeneratePerturbationError(PaqtError):
    """A perturbed iterate collapsed to the zero vector; the direction must be redrawn."""


class NotInformationallyCompleteError(PaqtError):
    """The design matrix does not span the traceless operator space."""


class FilterCollapseError(PaqtError):
    """Every particle likelihood underflowed; the posterior approximation is lost."""


class NumericalDegeneracyError(PaqtError):
    """A posterior covariance factorization failed beyond repair."""


class ConfigError(PaqtError, ValueError):
    """Invalid run configuration."""
