"""Exception types raised across the package."""


class ZLapError(Exception):
    """Base class for all errors raised by zlap."""


class InputError(ZLapError, ValueError):
    """Invalid graph, parameter vector, or scenario input."""


class ConvergenceError(ZLapError, ArithmeticError):
    """An iterative solver hit its iteration cap."""
