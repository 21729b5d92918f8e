"""Exception types raised across the package."""


class ConfigurationError(ValueError):
    """A problem, dataset or training configuration violates an invariant."""


class NumericError(ArithmeticError):
    """Non-finite values entered or left a numerical kernel."""


class ConvergenceError(RuntimeError):
    """Source iteration hit its iteration cap before reaching tolerance."""

    def __init__(self, message, residual, iterations):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class TrainingDiverged(RuntimeError):
    """The training loss became non-finite."""

    def __init__(self, message, epoch):
        super().__init__(message)
        self.epoch = epoch


class ParseError(ValueError):
    """A dataset or model file could not be parsed."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class SchemaError(ValueError):
    """A file parsed but its declared shapes are inconsistent."""
