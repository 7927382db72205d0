"""Exception types shared across the package."""


class GeometryError(ValueError):
    """Base class for invalid geometric input."""


class Degenerate(GeometryError):
    """Input does not span a body with non-empty interior."""


class OriginOutside(GeometryError):
    """The origin is not strictly interior to a body that needs it."""


class NotSymmetric(GeometryError):
    """A centrally symmetric body was required."""


class SeparationViolated(GeometryError):
    """Two clusters sit closer than the separation the parameters promise.

    ``pair`` holds the two offending cluster intervals and ``distance`` their
    circle distance.
    """

    def __init__(self, message, pair=None, distance=None, component=None):
        super().__init__(message)
        self.pair = pair
        self.distance = distance
        self.component = component


class PreconditionViolated(GeometryError):
    """Parameters fail a strict inequality the algorithm depends on."""


class NoStableWindow(GeometryError):
    """No jump-free window exists in the admissible range."""


class ParseError(ValueError):
    """Malformed body file."""

    def __init__(self, message, path=None, field=None):
        where = ""
        if path is not None:
            where += f"{path}: "
        if field is not None:
            where += f"[{field}] "
        super().__init__(where + message)
        self.path = path
        self.field = field
