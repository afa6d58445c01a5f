"""Exception types shared across the package."""


class GenAlgError(Exception):
    """Base class for all library errors."""


class GridMismatchError(GenAlgError):
    """Operands live on different epsilon grids or spatial domains."""


class PreconditionError(GenAlgError):
    """A documented operation precondition was violated by the caller."""


class ExpressionError(GenAlgError):
    """A data expression could not be parsed or evaluated."""


class ConfigError(GenAlgError):
    """An experiment configuration failed validation."""


class NotInVAPlus(GenAlgError):
    """A net failed validation as an admissible viscosity scale.

    ``clause`` names the violated requirement: "range" (values outside (0,1]),
    "limit" (no decay to zero along the grid) or "reciprocal" (1/r fails to be
    of polynomial growth).
    """

    def __init__(self, clause: str, message: str):
        super().__init__(f"{clause}: {message}")
        self.clause = clause


class LinearSolveError(GenAlgError):
    """Conjugate gradient failed to reach the requested residual."""

    def __init__(self, message: str, iterations: int, relative_residual: float):
        super().__init__(message)
        self.iterations = iterations
        self.relative_residual = relative_residual


class PicardStalled(GenAlgError):
    """The damped fixed-point iteration hit its cap without converging."""

    def __init__(self, message: str, residuals):
        super().__init__(message)
        self.residuals = list(residuals)


class MaxPrincipleViolation(GenAlgError):
    """A converged solution left the data bounds by more than the tolerance."""

    def __init__(self, message: str, margin: float):
        super().__init__(message)
        self.margin = margin


class NotWeaklySolvable(GenAlgError):
    """The vanishing-viscosity hypothesis failed for the given data nets."""

    def __init__(self, message: str, net=None):
        super().__init__(message)
        self.net = net
