"""Exception hierarchy shared by every stage of the pipeline."""


class MalseqError(Exception):
    """Base class for all package errors."""


class InputError(MalseqError):
    """Bad input data or unreadable files (CLI exit code 2)."""


class MalformedDocument(InputError):
    pass


class MissingBehaviorSection(InputError):
    pass


class EmptyProcessList(InputError):
    pass


class DirectoryUnreadable(InputError):
    pass


class IoFailure(InputError):
    pass


class SchemaMismatch(InputError):
    pass


class ClassTooSmall(MalseqError):
    pass


class SingleClass(MalseqError):
    pass


class EmptyTrainingSet(MalseqError):
    pass


class EmptyEvaluation(MalseqError):
    pass


class LengthMismatch(MalseqError, ValueError):
    pass


class DimensionMismatch(MalseqError, ValueError):
    pass


class ShapeMismatch(MalseqError, ValueError):
    pass


class CodeOutOfRange(MalseqError, ValueError):
    pass


class ConfigError(MalseqError):
    """Invalid configuration (CLI exit code 3)."""
