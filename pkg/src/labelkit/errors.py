"""Shared exception types.

The service layer maps these onto HTTP status codes (InputError -> 422,
NotFoundError -> 404, ConflictError -> 409); the CLI maps them onto
exit code 1.
"""


class LabelKitError(Exception):
    """Base class for all errors raised by this package."""


class InputError(LabelKitError, ValueError):
    """Caller supplied invalid input (bad geometry, unknown mode, ...)."""


class NotFoundError(LabelKitError):
    """A referenced entity (project, image, job) does not exist."""


class ConflictError(LabelKitError):
    """State conflict: duplicate name, concurrent job, stale revision."""


class TransportError(LabelKitError):
    """An inference sidecar could not be reached or answered garbage.

    Distinct from an empty-but-successful result such as zero detections.
    """


class ParseError(InputError):
    """A dataset file failed to parse; carries file/location context."""

    def __init__(self, message: str, *, file: str | None = None, location: str | None = None):
        self.file = file
        self.location = location
        prefix = ""
        if file:
            prefix = file if not location else f"{file}:{location}"
        super().__init__(f"{prefix}: {message}" if prefix else message)


class UnsupportedExportError(InputError):
    """Requested (project mode, export format) pair is not supported."""

    def __init__(self, mode: str, fmt: str, hint: str = ""):
        self.mode = mode
        self.fmt = fmt
        msg = f"project mode {mode!r} cannot be exported as {fmt!r}"
        if hint:
            msg += f" ({hint})"
        super().__init__(msg)
