"""Error taxonomy shared by the library and the CLI exit codes."""


class CoarseNavError(Exception):
    exit_code = 4


class InputError(CoarseNavError, ValueError):
    """Malformed input (bad vertex, bad JSON, invalid parameters)."""

    exit_code = 3


class PreconditionError(InputError):
    """An operation was called outside its documented precondition."""


class StructuralError(CoarseNavError):
    """The input object violates a structural requirement (e.g. not median)."""

    exit_code = 3


class CapabilityError(InputError):
    """The path system kind does not support the requested operation."""


class IncompleteEnumerationError(CoarseNavError):
    """An exhaustive computation would rely on a truncated enumeration."""

    exit_code = 4


class ConsistencyError(CoarseNavError, AssertionError):
    """A postcondition backed by a theorem failed; always a bug or a counterexample."""

    exit_code = 4
