"""Exception hierarchy, human readable messages and CLI exit codes."""

from __future__ import annotations


class FlockError(Exception):
    """Base class for every error raised by rggflock."""

    code = "FLOCK_ERROR"


class ConfigError(FlockError):
    """The experiment configuration is malformed."""

    code = "CONFIG"

    def __init__(
        self, message: str, path: str | None = None, line: int | None = None
    ) -> None:
        self.message = message
        self.path = path
        self.line = line
        location = ""
        if path:
            location = f" at '{path}'"
        if line is not None:
            location += f" (line {line})"
        super().__init__(f"{message}{location}")


class InvalidKernel(ConfigError, ValueError):
    """Kernel parameters violate the kernel invariants."""

    code = "INVALID_KERNEL"


class KernelFamilyNotSupportedException(FlockError):
    """This kernel family is not supported"""

    code = "UNSUPPORTED_FAMILY"


class DomainError(FlockError, ValueError):
    """An argument lies outside the domain of the operation."""

    code = "DOMAIN"


class NumericalError(FlockError):
    """A numerical routine failed."""

    code = "NUMERICAL"


class ConvergenceError(NumericalError):
    """Bracket expansion or root finding did not converge."""

    code = "CONVERGENCE"


class QuadratureError(NumericalError):
    """Adaptive quadrature missed its tolerance."""

    code = "QUADRATURE"


class RadialFormulaInvalid(NumericalError):
    """The support ball around the cube center leaves the unit cube."""

    code = "RADIAL_FORMULA"


class DegenerateKernel(NumericalError):
    """The interaction weight is constant or identically zero."""

    code = "DEGENERATE"


class CheegerTooLarge(DomainError):
    """Exact Cheeger enumeration requested for too many agents."""

    code = "CHEEGER_TOO_LARGE"


ERROR_MESSAGES = {
    "FLOCK_ERROR": "Unexpected failure",
    "CONFIG": "Configuration is invalid",
    "INVALID_KERNEL": "Kernel parameters are invalid",
    "UNSUPPORTED_FAMILY": "This kernel family is not supported",
    "DOMAIN": "Argument outside the domain of the operation",
    "NUMERICAL": "Numerical routine failed",
    "CONVERGENCE": "Root bracket did not close after repeated doubling",
    "QUADRATURE": "Quadrature tolerance not reached",
    "RADIAL_FORMULA": "Radial moment formula invalid, support exceeds 1/2",
    "DEGENERATE": "Kernel is degenerate (constant interaction weight)",
    "CHEEGER_TOO_LARGE": (
        "Too many agents for exact Cheeger enumeration, use the sweep bound"
    ),
}

EXIT_SUCCESS = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2
EXIT_CONVERGENCE = 3


def get_error_message(code: str) -> str:
    """Return the human readable message for an error code.

    Args:
        code: Error code as stored on the exception class.

    Returns:
        The message, or the code itself when it is unknown.
    """
    return ERROR_MESSAGES.get(code, str(code))


def exit_code_for(error: BaseException) -> int:
    """Map an exception to the process exit code."""
    if isinstance(error, ConfigError):
        return EXIT_CONFIG
    if isinstance(error, NumericalError):
        return EXIT_CONVERGENCE
    return EXIT_FAILURE
