"""Exception types.  CLI exit codes map onto the two top-level families."""


class WWLSError(Exception):
    """Base class for errors raised by this package."""


class InputError(WWLSError, ValueError):
    """Malformed or inconsistent input data (exit code 2)."""


class ComputeError(WWLSError, RuntimeError):
    """A computation could not be completed (exit code 3)."""


class NoiseExhaustedError(ComputeError):
    """No legal edge edit remains for the requested noise operation."""


class SolverError(ComputeError):
    """Optimal-transport solver failure."""


class ParamsMismatchError(WWLSError, ValueError):
    """Feature vectors built under different hash parameters were compared."""
