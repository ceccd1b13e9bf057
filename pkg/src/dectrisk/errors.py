"""Exception types raised across the package."""


class DecError(Exception):
    """Base class for all package errors."""


class InvalidMeshSize(DecError, ValueError):
    pass


class MeshParseError(DecError, ValueError):
    """Malformed mesh file. ``line`` is the 1-based line number when known."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class MeshValidationError(DecError, ValueError):
    def __init__(self, failures):
        self.failures = list(failures)
        super().__init__("invalid mesh: " + "; ".join(self.failures))


class MissingGeometry(DecError, ValueError):
    pass


class WrongDegree(DecError, ValueError):
    pass


class UnsupportedScaling(DecError, ValueError):
    pass


class PairingTypeError(DecError, TypeError):
    pass


class CochainTypeError(DecError, TypeError):
    """A cochain of the wrong degree, grid or flavor was passed to an operator."""


class UnsupportedHodge(DecError, ValueError):
    pass


class SingularHodge(DecError, ZeroDivisionError):
    pass


class UnsupportedVariant(DecError, ValueError):
    pass


class ConstructionFailure(DecError, RuntimeError):
    pass


class PVSingularity(DecError, ArithmeticError):
    """Diagnosed thickness (R h) is zero or negative on some straight cells."""

    def __init__(self, cells):
        self.cells = [int(c) for c in cells]
        shown = self.cells[:10]
        more = "" if len(self.cells) <= 10 else f" (+{len(self.cells) - 10} more)"
        super().__init__(f"non-positive diagnosed thickness on cells {shown}{more}")


class IntegratorDivergence(DecError, RuntimeError):
    """Fixed-point iteration of an implicit step failed to converge."""

    def __init__(self, message, history):
        self.history = list(history)
        super().__init__(message)


class SimulationError(DecError, RuntimeError):
    """A step failed during ``run``; ``step`` is the index of the failing step."""

    def __init__(self, step, cause):
        self.step = step
        self.cause = cause
        super().__init__(f"step {step}: {cause}")


class ConfigError(DecError, ValueError):
    pass
