"""Exception types shared across the toolkit.

The CLI maps these onto process exit codes: ConfigError -> 2,
ConvergenceError -> 3, PreconditionError -> 4.
"""


class ConeboundError(Exception):
    """Base class for all toolkit errors."""

    exit_code = 1


class ConfigError(ConeboundError):
    """Malformed or inconsistent configuration input."""

    exit_code = 2


class ConvergenceError(ConeboundError):
    """A numerical procedure failed to converge within its iteration budget."""

    exit_code = 3


class PreconditionError(ConeboundError):
    """An operation was called outside its documented domain of validity."""

    exit_code = 4
