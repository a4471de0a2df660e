"""Exception hierarchy shared by the whole package.

Every error carries a short machine-readable ``code`` so the CLI can emit
it on the diagnostic stream and map it to an exit status.
"""


class VpError(Exception):
    """Base class for all package errors."""

    code = "error"
    exit_code = 2

    def __init__(self, message, code=None):
        super().__init__(message)
        if code is not None:
            self.code = code


class InputError(VpError):
    """Malformed or inconsistent input data (file, flag, geometry)."""

    code = "input"
    exit_code = 2


class InfeasibleError(VpError):
    """A target that no circle on the given grid can satisfy."""

    code = "infeasible"
    exit_code = 3


class DegenerateProfileError(VpError):
    """Profile undefined because the whole population sits in one cell."""

    code = "degenerate-profile"
    exit_code = 3
