"""Exception and warning classes shared across the package."""


class ValidationError(ValueError):
    """Invalid parameters or inputs."""


class DomainError(ValueError):
    """Argument outside the mathematical domain of a function."""


class FitError(RuntimeError):
    """A fit could not proceed (non-finite residuals, no usable data)."""

    def __init__(self, message, last_params=None):
        super().__init__(message)
        self.last_params = last_params


class RegimeWarning(UserWarning):
    """A model is evaluated outside the regime where its closed form holds."""


class IdentifiabilityWarning(UserWarning):
    """Fitted parameters are poorly constrained by the data."""


class ParseError(ValidationError):
    """Malformed input file; ``line`` is the 1-based line number when known."""

    def __init__(self, message, path=None, line=None):
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where += ": "
        super().__init__(where + message)
        self.path = path
        self.line = line
