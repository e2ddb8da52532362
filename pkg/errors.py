"""
Error Types for kaehler
========================
One base class per failure family. The CLI maps them onto exit codes:
InputError -> 2, ResourceError -> 3. Failed identities are never raised by
the verification suites; they come back as CheckResult(passed=False).
"""


class KaehlerError(Exception):
    """Base class for every error raised by the library."""


class InputError(KaehlerError, ValueError):
    """Malformed input or a violated type invariant."""


class ParseError(InputError):
    """Polynomial text that does not match the grammar."""


class UnsupportedSizeError(InputError):
    """Operation requested on a size it does not support (det with n > 4)."""


class ResourceError(KaehlerError, RuntimeError):
    """A configured resource bound was hit."""

    def __init__(self, message: str, cap: int):
        super().__init__(message)
        self.cap = cap


class VerificationFailure(KaehlerError):
    """A construction-time self check failed."""

    def __init__(self, message: str, witness: str = ""):
        super().__init__(message)
        self.witness = witness
