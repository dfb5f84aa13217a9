"""Exception types shared across the toolkit."""


class ValidationError(ValueError):
    """An input violates a documented invariant."""


class ParseError(ValidationError):
    """A stream could not be parsed.

    `line` is the 1-based offending line number, or None when the failure
    is not tied to a single line (e.g. a truncated JSON document).
    """

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class SingularTransformError(ValidationError):
    """The paper-literal center map is not invertible at this angle.

    `rows` carries the offending row indices for batched calls.
    """

    def __init__(self, message, rows=()):
        super().__init__(message)
        self.rows = tuple(rows)
