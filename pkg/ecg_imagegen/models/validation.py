"""Shared parameter validation for the domain dataclasses"""


class ParameterError(ValueError):
    """Raised when a dataclass field violates its invariant

    Attributes:
        field: Name of the offending field (dotted paths are built by the config loader)
    """

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field
        self.message = message


def require(condition: bool, field: str, message: str) -> None:
    """Raise ParameterError for ``field`` unless ``condition`` holds"""
    if not condition:
        raise ParameterError(field, message)
