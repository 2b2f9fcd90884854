"""Exception types shared across the package."""


class PoleplaceError(Exception):
    """Base class for all package errors."""


class ImproperPlantError(PoleplaceError):
    """An MFD fails the degree pattern required of a normalized plant."""


class UnsupportedInputError(PoleplaceError):
    """Input is valid mathematics but outside what this package handles."""


class ConsistencyError(PoleplaceError):
    """An internal cross-check failed; indicates a bug or a broken invariant."""


class ParseError(PoleplaceError):
    """A structured input document failed to parse.

    ``location`` is an indexed path into the document, e.g. ``D[0][1][2]``.
    """

    def __init__(self, message: str, location: str = ""):
        self.location = location
        super().__init__(f"{location}: {message}" if location else message)
