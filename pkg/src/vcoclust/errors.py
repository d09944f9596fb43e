"""Exception hierarchy shared across the package.

The CLI maps these onto process exit codes: usage problems exit 1,
input/config problems exit 2, numeric failures exit 3.
"""


class VcoclustError(Exception):
    """Base class for all package errors."""


class ShapeError(VcoclustError, ValueError):
    """Operand dimensions do not agree."""


class DomainError(VcoclustError, ValueError):
    """Input outside the mathematical domain of an operation."""


class NumericError(VcoclustError, ArithmeticError):
    """A computation produced non-finite values or diverged."""


class ContractError(VcoclustError, ValueError):
    """An internal API precondition was violated."""


class InputError(VcoclustError, ValueError):
    """A data file failed to parse or violates the format contract."""


class ConfigError(VcoclustError, ValueError):
    """A run configuration key is unknown or out of range."""
