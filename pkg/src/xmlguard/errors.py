"""Exception hierarchy shared by every xmlguard module."""

from __future__ import annotations


class XmlGuardError(Exception):
    """Base class for all errors raised by xmlguard."""


class PositionedError(XmlGuardError):
    """An error that can point at a location in some source text."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        if line is not None:
            where = f"line {line}" + (f", column {column}" if column is not None else "")
            message = f"{message} ({where})"
        super().__init__(message)


class DtdSyntaxError(PositionedError):
    pass


class DtdError(XmlGuardError):
    """Semantically invalid schema: unknown or duplicate element types, missing root."""


class XmlFormatError(XmlGuardError):
    """Input XML is malformed or uses constructs outside the element/text model."""


class XPathSyntaxError(XmlGuardError):
    def __init__(self, message: str, position: int | None = None):
        self.position = position
        if position is not None:
            message = f"{message} (at offset {position})"
        super().__init__(message)


class FragmentError(XmlGuardError):
    """Expression falls outside the XPath fragment allowed at that point."""


class PolicyError(PositionedError):
    pass


class UpdateSyntaxError(XmlGuardError):
    pass


class DynamicError(XmlGuardError):
    """Raised when an update cannot be applied to the selected target nodes."""


class UnsupportedQueryError(XmlGuardError):
    """A view query uses a construct that cannot be translated to the source document."""
