"""Exception types shared across the toolkit.

The CLI maps these onto exit codes: usage problems exit 1, anything
derived from :class:`DataError` exits 2, and I/O failures exit 3.
"""


class LidkitError(Exception):
    """Base class for all toolkit errors."""


class DataError(LidkitError):
    """Invalid data, labels, model files or configuration."""


class InvalidLabelError(DataError):
    def __init__(self, value: str, reason: str = "does not match xxx_Yyyy"):
        super().__init__(f"invalid label {value!r}: {reason}")
        self.value = value


class DuplicateLabelError(DataError):
    pass


class EmptyCorpusError(DataError):
    pass


class SingleClassError(DataError):
    pass


class MalformedLineError(DataError):
    def __init__(self, path: str, line_no: int, reason: str):
        super().__init__(f"{path}:{line_no}: {reason}")
        self.path = path
        self.line_no = line_no
        self.reason = reason


class EmptyGoldSetError(DataError):
    pass


class LengthMismatchError(DataError):
    pass


class UnknownClassError(DataError):
    pass


class NoClassesError(DataError):
    pass


class InvalidRangeError(DataError):
    pass


class FormatError(DataError):
    """Model file has a bad magic number, version or field encoding."""


class TruncatedFileError(DataError):
    """Model file ends before the declared payload is complete."""


class ShapeMismatchError(DataError):
    """Model file sizes disagree with the shapes declared in its header."""


class SpecialistMissingError(DataError):
    """Cascade routing hit a group whose specialist model cannot be loaded."""


class ConfigError(DataError):
    pass
