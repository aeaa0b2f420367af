"""Exception taxonomy shared by all modules.

The CLI maps these onto exit codes: format problems exit 2, resource
limits exit 3.  Analysis verdicts (contextual / not embeddable / LP
infeasible) are *results*, never exceptions.
"""


class ClassicalityError(Exception):
    """Base class for all errors raised by this package."""


class FormatError(ClassicalityError):
    """Malformed input: bad schema, dimension mismatch, unknown label."""


class ResourceLimitError(ClassicalityError):
    """Input exceeds a desk-scale size limit (cone dimension, LP size, ...)."""


class NumericalError(ClassicalityError):
    """A computation failed numerically (singular basis, non-convergence)."""
