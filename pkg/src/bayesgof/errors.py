"""Exception types shared across the package.

The CLI maps these onto distinct exit codes, so library code should raise
the most specific type that applies rather than bare ValueError.
"""


class BayesgofError(Exception):
    """Base class for all package-specific errors."""


class DomainError(BayesgofError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class ConfigError(BayesgofError, ValueError):
    """An experiment or CLI configuration is inconsistent or incomplete."""


class DataError(BayesgofError, ValueError):
    """Input data violates the documented schema or model requirements."""


class EvaluationError(BayesgofError, RuntimeError):
    """A numerical evaluation produced a non-finite or invalid result."""


class OptimizationError(BayesgofError, RuntimeError):
    """An iterative optimizer failed to converge within its budget."""
