"""Exception types raised across the package."""


class GeoswarmError(Exception):
    """Base class for all package errors."""


class DomainViolation(GeoswarmError):
    """A point left (or was given outside) the admissible domain."""

    def __init__(self, message, coords=None, step=None, particle=None):
        super().__init__(message)
        self.coords = coords
        self.step = step
        self.particle = particle

    def as_dict(self):
        return {
            "message": str(self),
            "coords": None if self.coords is None else [float(c) for c in self.coords],
            "step": self.step,
            "particle": self.particle,
        }


class NearAntipodal(GeoswarmError):
    """Two sphere points are too close to being antipodal for log to be defined."""


class NonFiniteValue(GeoswarmError):
    pass


class HypothesisUnmet(GeoswarmError):
    """A supplied constant does not satisfy the hypothesis it is meant to certify."""


class Degenerate(GeoswarmError):
    pass


class TooLarge(GeoswarmError):
    pass


class TimeGridMismatch(GeoswarmError):
    pass


class ConfigError(GeoswarmError):
    """Invalid run configuration; ``field`` names the offending entry."""

    def __init__(self, message, field=None, line=None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field '{field}'")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)
        self.field = field
        self.line = line
