"""Exception taxonomy.

The CLI maps these onto exit codes: validation-type errors exit with 2,
numeric degeneracies with 3.
"""


class GreedyTLError(Exception):
    """Base class for all package errors."""


class ValidationError(GreedyTLError):
    """Malformed data, labels, or input files."""


class DimensionError(ValidationError):
    """Shape or width mismatch between inputs."""


class ParameterError(ValidationError):
    """Hyperparameter outside its admissible range."""


class BudgetError(ParameterError):
    """Combinatorial enumeration budget exceeded."""


class MetricError(ValidationError):
    """Metric undefined for the given inputs (e.g. single-class labels)."""


class NumericDegeneracyError(GreedyTLError):
    """Numerically degenerate linear-algebra update.

    Unreachable for positive-definite states; raised defensively when a
    rank-one update denominator collapses.
    """
