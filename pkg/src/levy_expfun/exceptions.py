"""Exception hierarchy shared by every module of the package."""


class NumericalError(ArithmeticError):
    """Base class for numerical failures (CLI exit code 3)."""

    module = "levy_expfun"

    def __init__(self, message, *, where=None):
        super().__init__(message)
        self.where = where


class GammaPoleError(NumericalError):
    """A gamma-function argument sits on a pole (a non-positive integer)."""

    def __init__(self, argument, *, where=None):
        self.argument = argument
        super().__init__(f"gamma pole at argument {argument!r}", where=where)


class PoleError(NumericalError):
    """A rational function was evaluated at one of its poles."""


class ConvergenceError(NumericalError):
    """A series, quadrature or iteration failed to converge."""


class CancellationError(NumericalError):
    """Catastrophic cancellation beyond the precision-escalation budget."""


class IntegerSpacingError(NumericalError):
    """Meijer-G parameters b_j - b_k are (nearly) integers; series path undefined."""


class ConditionError(NumericalError):
    """Contour-integral conditions A/B of the Meijer-G definition do not hold."""


class RootFindingError(NumericalError):
    """Root tracking for psi(z) = q failed (collision or missing bracket)."""


class ParameterError(ValueError):
    """Invalid model/contract/config parameters (CLI exit code 2)."""
