"""Custom exceptions for shockdecomp."""

from typing import Any, List, Optional, Tuple


class ShockDecompException(Exception):
    """Base exception for shockdecomp."""
    pass


class InvalidParameterError(ShockDecompException, ValueError):
    """Raised when a model parameter is outside its admissible range."""
    pass


class EmptyEconomyError(InvalidParameterError):
    """Raised when no worker type carries a positive headcount."""
    pass


class SingularEquilibriumError(ShockDecompException):
    """Raised when 1 - phi * eta_eff vanishes and the equilibrium is undefined."""
    pass


class UndefinedElasticityError(ShockDecompException):
    """Raised when a type has zero baseline employment probability."""
    pass


class ConfigurationError(ShockDecompException):
    """Raised when a simulation or run configuration is invalid."""
    pass


class SpellSchemaError(ShockDecompException):
    """Raised when a spell file violates the documented CSV schema."""

    def __init__(self, message: str, line_number: Optional[int] = None):
        self.line_number = line_number
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)


class DuplicateSpellError(SpellSchemaError):
    """Raised when a (worker_id, year) pair occurs more than once."""

    def __init__(self, worker_id: int, year: int, line_number: Optional[int] = None):
        self.pair: Tuple[int, int] = (worker_id, year)
        super().__init__(f"duplicate spell for worker {worker_id} in {year}", line_number)


class TransitionError(ShockDecompException):
    """Raised when two spells cannot form a transition."""
    pass


class ImputationError(ShockDecompException):
    """Raised when censored wages cannot be imputed."""
    pass


class NotInSampleError(ShockDecompException):
    """Raised when a worker has no qualifying prior spell."""
    pass


class SingularDesignError(ShockDecompException):
    """Raised when a design matrix is rank deficient."""

    def __init__(self, message: str, column: Optional[str] = None):
        self.column = column
        super().__init__(message)


class UnderIdentifiedError(ShockDecompException):
    """Raised when there are fewer excluded instruments than endogenous regressors."""
    pass


class InferenceError(ShockDecompException):
    """Raised when bootstrap inference cannot be carried out."""
    pass


class SeparationError(ShockDecompException):
    """Raised when probit coefficients diverge under perfect separation."""
    pass


class ConvergenceError(ShockDecompException):
    """Raised when Newton-Raphson does not converge."""

    def __init__(self, message: str, trace: Optional[List[Any]] = None):
        self.trace = trace or []
        super().__init__(message)


class EmptySampleError(ShockDecompException):
    """Raised when an estimation sample is empty."""
    pass


class DegenerateRecoveryError(ShockDecompException):
    """Raised when structural recovery divides by zero."""

    def __init__(self, quantity: str):
        self.quantity = quantity
        super().__init__(f"Cannot recover structural parameters: {quantity} is zero")


class UndefinedRatioError(ShockDecompException):
    """Raised when the headcount shock is zero and c cannot be formed."""
    pass


class StudyError(ShockDecompException):
    """Raised when a named study fails inside the pipeline."""

    def __init__(self, study: str, cause: Exception):
        self.study = study
        self.cause = cause
        super().__init__(f"study '{study}' failed: {cause}")
