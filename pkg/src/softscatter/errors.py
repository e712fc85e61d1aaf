"""Exception hierarchy shared across the package.

Every error that can escape a public operation derives from
:class:`SoftScatterError` and carries an ``exit_code`` used by the command
line layer (0 success, 2 validation failure, 3 numerical failure, 4 I/O
error) plus an optional ``payload`` dict with machine-readable context that
the HTTP layer forwards verbatim.
"""

from __future__ import annotations


class SoftScatterError(Exception):
    """Base class for all package errors."""

    exit_code = 3
    http_status = 500

    def __init__(self, message: str, **payload):
        super().__init__(message)
        self.payload = payload


class ConfigurationError(SoftScatterError):
    """A precondition on configuration or input geometry is violated."""

    exit_code = 2
    http_status = 422


class ParseError(ConfigurationError):
    """A data file could not be parsed; names the offending file and line."""

    exit_code = 4
    http_status = 400

    def __init__(self, message: str, path: str | None = None, line: int | None = None, **payload):
        loc = ""
        if path is not None:
            loc = f" [{path}" + (f":{line}" if line is not None else "") + "]"
        super().__init__(message + loc, path=path, line=line, **payload)


class SingularArgumentError(SoftScatterError, ValueError):
    """Kernel evaluated at a coincident point pair."""

    exit_code = 3
    http_status = 422


class SolverFailure(SoftScatterError):
    """A linear solve did not reach the requested residual."""

    exit_code = 3
    http_status = 409

    def __init__(self, message: str, residual: float | None = None, **payload):
        if residual is not None:
            payload["residual"] = residual
        super().__init__(message, **payload)
        self.residual = residual


class SynthesisFailure(SoftScatterError):
    """The regularization ladder could not meet the target residual."""

    exit_code = 3
    http_status = 409

    def __init__(self, message: str, best_residual: float | None = None,
                 smallest_lambda: float | None = None, **payload):
        if best_residual is not None:
            payload["best_residual"] = best_residual
        if smallest_lambda is not None:
            payload["smallest_lambda"] = smallest_lambda
        super().__init__(message, **payload)
        self.best_residual = best_residual
        self.smallest_lambda = smallest_lambda


class RealizabilityError(SoftScatterError):
    """The requested potential cannot be realized as a particle density."""

    exit_code = 3
    http_status = 409


class SingularImpedanceError(ConfigurationError):
    """The impedance correction denominator vanishes."""

    exit_code = 2
    http_status = 422


class PackingError(SoftScatterError):
    """Hard-core sampling cannot place the requested number of particles."""

    exit_code = 3
    http_status = 409

    def __init__(self, message: str, max_feasible_density: float | None = None, **payload):
        if max_feasible_density is not None:
            payload["max_feasible_density"] = max_feasible_density
        super().__init__(message, **payload)
        self.max_feasible_density = max_feasible_density
