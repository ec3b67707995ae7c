"""Exception types shared across the package."""


class DelcardsError(Exception):
    """Base class for all package-specific failures."""


class CapacityError(DelcardsError):
    """Requested model would exceed the configured world cap."""


class UnknownAgentError(DelcardsError, LookupError):
    pass


class UnknownWorldError(DelcardsError, LookupError):
    pass


class FormulaSyntaxError(DelcardsError, ValueError):
    """Raised by the formula parser; carries position and expected tokens."""

    def __init__(self, message: str, position: int, expected: frozenset[str] = frozenset()):
        self.position = position
        self.expected = expected
        detail = f"{message} at position {position}"
        if expected:
            detail += " (expected one of: " + ", ".join(sorted(expected)) + ")"
        super().__init__(detail)


class InvalidAnnouncementError(DelcardsError, ValueError):
    pass


class TruthfulnessError(DelcardsError, ValueError):
    """An announcer does not know the formula she is about to announce."""


class ProtocolError(DelcardsError, ValueError):
    """Protocol execution reached an inconsistent state (e.g. empty model)."""
