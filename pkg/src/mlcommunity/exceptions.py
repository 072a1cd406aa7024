"""Exception types raised across the package."""


class DegenerateInputError(ValueError):
    """An aggregate or embedding cannot support the requested number of communities."""


class UnsupportedKError(ValueError):
    """The requested metric cannot be evaluated exhaustively for this many communities."""


class EdgeListParseError(ValueError):
    """Malformed edge-list or returns file."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
