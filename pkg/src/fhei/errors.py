"""Exception hierarchy. Every error raised by the library derives from FHEIError."""

from __future__ import annotations


class FHEIError(Exception):
    pass


class OutOfRangeClass(FHEIError, IndexError):
    pass


class FeatureTooLarge(FHEIError, ValueError):
    pass


class DegenerateSamples(FHEIError, ValueError):
    pass


class LengthMismatch(FHEIError, ValueError):
    pass


class ZeroResource(FHEIError, ZeroDivisionError):
    pass


class ZeroRate(FHEIError, ValueError):
    pass


class LatencyInfeasible(FHEIError):
    """Average-latency budget cannot be met for the given feature sizes."""


class NoBracket(LatencyInfeasible):
    """Multiplier bracket search hit its doubling cap."""


class EnergyInfeasible(FHEIError):
    """Average-energy budget is exceeded already at the minimum feature sizes."""


class InitialInfeasible(FHEIError):
    """The starting point d = d_min fails the latency or energy budget."""


class TooLarge(FHEIError, ValueError):
    pass


class ConfigError(FHEIError):
    pass


class ParseError(ConfigError):
    def __init__(self, message: str, line: int | None = None, field: str | None = None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field {field!r}")
        super().__init__(f"{message} ({', '.join(where)})" if where else message)
        self.line = line
        self.field = field


class ValidationError(ConfigError):
    def __init__(self, message: str, field: str | None = None):
        super().__init__(f"{field}: {message}" if field else message)
        self.field = field
