"""Exception hierarchy shared by every module.

The CLI maps these onto exit codes: ``VerificationFailure`` -> 2,
``PrecisionError`` / ``ConfigurationError`` and friends -> 3.
"""


class LabError(Exception):
    """Base class for all errors raised by skewlab."""


class SpecError(LabError, ValueError):
    """Malformed input specification (alpha spec, series file, CLI value)."""


class DomainError(LabError, ValueError):
    """Argument outside the mathematical domain of an operation."""


class RangeError(LabError, IndexError):
    """Request beyond the extent of a precomputed table."""


class ShapeError(LabError, ValueError):
    """Truncation / dimension mismatch between torus points and specs."""


class PrecisionError(LabError, ArithmeticError):
    """A certified quantity could not be certified at the available precision."""

    def __init__(self, message, required_index=None, mode=None):
        super().__init__(message)
        self.required_index = required_index
        self.mode = mode


class NearResonanceError(PrecisionError):
    """A small divisor 1 - e(m alpha) is too close to zero to invert safely."""


class ConfigurationError(LabError):
    """Experiment parameters violate a precondition (truncation too small, etc.)."""


class ResourceError(LabError, MemoryError):
    """Requested work exceeds a configured memory or enumeration budget."""


class BranchError(LabError):
    """Operation applies to a different proof branch than the one detected."""


class VerificationFailure(LabError, AssertionError):
    """A numerical check failed; carries the witness that broke it."""

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness
