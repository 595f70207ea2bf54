"""Exception types shared across the package."""


class FlowElmError(Exception):
    """Base class for every error raised by this package."""


class ShapeError(FlowElmError, ValueError):
    """Operands have incompatible dimensions."""


class DataError(FlowElmError, ValueError):
    """Invalid, empty, or malformed input data."""


class SchemaError(DataError):
    """File contents do not match the configured schema."""


class ParseError(DataError):
    """A file could not be parsed."""


class IntegrityError(DataError):
    """A stored artifact is truncated, corrupt, or internally inconsistent."""


class UnsupportedVersionError(DataError):
    """A stored artifact uses a format version this build cannot read."""


class StratificationError(DataError):
    """A class is too small for the requested stratified partition."""


class NumericError(FlowElmError, RuntimeError):
    """A numerical routine failed to converge."""
