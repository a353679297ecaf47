"""Exception hierarchy shared across the toolkit."""


class KgEraseError(Exception):
    """Base class for all toolkit errors."""


class InvalidEntityError(KgEraseError, ValueError):
    pass


class DegenerateRatioError(KgEraseError, ValueError):
    """The sampling target is zero or no eligible triple remains."""


class UnencodableTripleError(KgEraseError, ValueError):
    pass


class MalformedLinearizationError(KgEraseError, ValueError):
    def __init__(self, message: str, offset: int) -> None:
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


class UndefinedRatioError(KgEraseError, ValueError):
    pass


class InvalidRateError(KgEraseError, ValueError):
    pass


class AlignmentGapError(KgEraseError, ValueError):
    pass


class RemoteFailure(KgEraseError):
    """A model endpoint returned non-200, timed out, or could not be reached."""


class MalformedResponseError(RemoteFailure):
    pass


class SchemaViolationError(KgEraseError, ValueError):
    pass


class DanglingReferenceError(KgEraseError, ValueError):
    pass


class UndefinedAccuracyError(KgEraseError, ValueError):
    pass


class IncompleteRunError(KgEraseError):
    pass


class ConfigError(KgEraseError, ValueError):
    pass
