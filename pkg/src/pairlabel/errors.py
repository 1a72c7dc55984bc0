"""Exception types shared across the package.

The CLI maps these onto distinct exit codes, so solver failures,
oversized instances and malformed inputs stay distinguishable in
scripts.
"""


class InvalidInputError(ValueError):
    """An argument violates a documented precondition."""


class CapacityError(RuntimeError):
    """An exact oracle was asked for an instance above its size guard."""


class NumericalFailureError(RuntimeError):
    """A non-finite value appeared during iteration."""

    def __init__(self, message, iteration=None):
        super().__init__(message)
        self.iteration = iteration


class ModelParseError(ValueError):
    """A model file is malformed; carries the 1-based line number."""

    def __init__(self, message, line):
        super().__init__(f"line {line}: {message}")
        self.line = line
