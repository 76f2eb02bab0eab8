"""Exception hierarchy shared by every stage of the toolkit."""


class CdsError(Exception):
    """Base class for all toolkit errors."""


class ParseError(CdsError):
    """Malformed input text (XML, JSON, mapping lines or constraint source)."""

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        if line is not None:
            message = f"{message} (line {line}, column {column})"
        super().__init__(message)


class SchemaError(CdsError):
    pass


class DuplicateName(CdsError):
    pass


# mapping file
class UnknownWidgetKind(CdsError):
    pass


class UnknownProfileProperty(CdsError):
    pass


class DanglingPropertyMapping(CdsError):
    pass


# model generation
class TypeConversionError(CdsError):
    pass


class RegionOutOfBounds(CdsError):
    pass


class OverlappingWidgets(CdsError):
    pass


# state machine
class UnknownState(CdsError):
    pass


class NondeterministicMachine(CdsError):
    pass


class NoInitial(CdsError):
    pass


# scripts
class MissingDuration(CdsError):
    pass


# constraints
class DuplicateConstraintName(CdsError):
    pass


class ConstraintTypeError(CdsError):
    """Ill-typed comparison, detected statically or during evaluation."""


class RuntimeTypeError(ConstraintTypeError):
    pass


class MissingProperty(CdsError):
    """A constraint referenced a property the instance model does not carry."""


# simulation
class ProfileGap(CdsError):
    pass


class EmptySchedule(CdsError):
    pass


# rendering / recording
class MissingValue(CdsError):
    pass


class TextOverflow(CdsError):
    pass


class StorageError(CdsError):
    pass


# extraction
class DimensionMismatch(CdsError):
    pass


class NoGlyphs(CdsError):
    pass


class UnrecognizedGlyph(CdsError):
    pass


class FormatMismatch(CdsError):
    pass


# harness
class DuplicateProperty(CdsError):
    pass


class UnresolvableWidget(CdsError):
    pass


class PipelineError(CdsError):
    """Wraps a stage failure with the name of the stage that raised it."""

    def __init__(self, stage, cause):
        self.stage = stage
        self.cause = cause
        super().__init__(f"[{stage}] {type(cause).__name__}: {cause}")
