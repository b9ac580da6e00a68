"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: input/config/state problems exit 1,
numerical failures exit 2.
"""


class Abc3Error(Exception):
    """Base class for all package-specific errors."""


class InputError(Abc3Error, ValueError):
    """Malformed user data: bad CSV cells, shape mismatches, invalid vectors."""


class ConfigError(Abc3Error, ValueError):
    """Invalid configuration: bad kernel parameters, unknown policy names."""


class StateError(Abc3Error, RuntimeError):
    """Operation invalid in the current state, e.g. no candidates left."""


class NumericalError(Abc3Error, ArithmeticError):
    """Factorization or optimization failed beyond recoverable tolerances."""
