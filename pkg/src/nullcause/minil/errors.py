"""Errors raised by the Minil front end and runtime."""


class MinilError(Exception):
    pass


class ParseError(MinilError):
    def __init__(self, message: str, line: int = 0, column: int = 0, expected=()):
        self.message = message
        self.line = line
        self.column = column
        self.expected = tuple(expected)
        loc = f"{line}:{column}: " if line else ""
        extra = f" (expected one of: {', '.join(self.expected)})" if self.expected else ""
        super().__init__(f"{loc}{message}{extra}")


class MinilNameError(ParseError):
    """Unresolved or illegally redeclared identifier."""


class NotFound(MinilError):
    pass


class RuntimeConfigError(MinilError):
    pass
