"""Exception types shared across the package."""


class ValidationError(ValueError):
    """An argument or value violates a documented invariant."""


class CapacityError(ValidationError):
    """An input exceeds a declared implementation limit."""


class ParseError(Exception):
    """A file could not be parsed under the declared format.

    Carries the path and the 1-based line number (0 for header/binary
    sections where no line applies).
    """

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where += ": "
        super().__init__(where + message)
