"""Exception hierarchy shared by all tetot modules.

The CLI maps these onto exit codes: ``InputError`` (and its subclass
``DataError``) exit with 1, ``FormatError`` with 2.
"""


class TetotError(Exception):
    """Base class for all errors raised by this package."""


class InputError(TetotError):
    """Invalid arguments: shape mismatches, infeasible weights, missing labels."""


class DataError(InputError):
    """Structurally valid input carrying bad values (non-finite entries, labels out of range)."""


class SolverError(TetotError):
    """An optimization routine failed to reach a usable solution."""


class FormatError(TetotError):
    """Malformed file: bad magic, unsupported version or dtype, truncated payload."""
