class FormatError(ValueError):
    """Malformed input text (matrix, truth table, NNF or JSON object)."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
