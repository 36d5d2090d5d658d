"""Exception types shared across the package."""


class BayesBagError(Exception):
    """Base class for all errors raised by this package."""


class InvalidArgumentError(BayesBagError, ValueError):
    """An argument violates a documented precondition."""


class DegenerateInputError(BayesBagError, ValueError):
    """Inputs carry no usable information (e.g. every log evidence is -inf)."""


class ResourceLimitError(BayesBagError):
    """An enumeration guard was exceeded; the request is too large to run."""


class NumericDomainError(BayesBagError, ArithmeticError):
    """A numeric routine left its valid domain (non-positive-definite matrix,
    NaN input, and similar)."""


class InsufficientReplicatesError(BayesBagError, ValueError):
    """Fewer bootstrap replicates than the requested statistic needs."""


class VarianceUndefinedError(BayesBagError):
    """The posterior variance does not exist for these hyperparameters."""


class DegenerateLawError(BayesBagError):
    """The limit law is a point mass, so the requested CDF/density is undefined."""


class SingularLawError(BayesBagError):
    """Contrast covariance is singular (models are perfectly correlated)."""


class DegenerateContrastError(BayesBagError):
    """Log-likelihood contrasts have zero variance."""


class SingularMomentError(BayesBagError):
    """An estimated moment matrix is singular."""


class ReplicateEvaluationError(BayesBagError):
    """An evaluator raised inside a bootstrap replicate."""

    def __init__(self, replicate: int, cause: BaseException):
        super().__init__(f"evaluator failed on bootstrap replicate {replicate}: {cause!r}")
        self.replicate = replicate


class IngestionError(BayesBagError):
    """A data file could not be parsed or fails validation."""
