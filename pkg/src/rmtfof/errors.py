"""Exception hierarchy shared by every module.

The CLI maps :class:`InputError` to exit status 2 and :class:`NumericalError`
to exit status 3.
"""


class RMTError(Exception):
    """Base class for all package errors."""


class InputError(RMTError, ValueError):
    """Malformed or out-of-contract input."""


class InfeasibleTargetError(InputError):
    """Target return outside the attainable interval."""


class NumericalError(RMTError, ArithmeticError):
    """A numerical routine failed (singular system, no convergence)."""


class SingularSystemError(NumericalError):
    pass


class ConvergenceError(NumericalError):
    pass
