"""Exception types shared across the package.

The CLI maps these onto exit codes: usage errors exit 2, resource errors
exit 3 and integrity errors exit 4.
"""


class UsageError(ValueError):
    """Caller violated a precondition (bad arguments, wrong point-set kind)."""


class ResourceError(RuntimeError):
    """A request would exceed the memory/size budget; message carries an estimate."""


class IntegrityError(RuntimeError):
    """An internal consistency guarantee failed (e.g. duplicate projection angle)."""


EXIT_USAGE = 2
EXIT_RESOURCE = 3
EXIT_INTEGRITY = 4
