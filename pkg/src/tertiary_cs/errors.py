"""Exception types raised by the engine."""

from __future__ import annotations


class EngineError(ValueError):
    """Base class for every error raised by this package."""


class ChartMismatch(EngineError):
    pass


class RankMismatch(EngineError):
    pass


class GradeMismatch(EngineError):
    pass


class GradeOverflow(EngineError):
    pass


class RankNotScalar(EngineError):
    pass


class FrequencyOverflow(EngineError):
    """A product produced Fourier modes beyond the chart's ``k_max``."""

    def __init__(self, k_max: int, max_freq: int, magnitude: float):
        self.k_max = k_max
        self.max_freq = max_freq
        self.magnitude = magnitude
        super().__init__(
            f"product needs frequency {max_freq} > k_max={k_max} "
            f"(coefficient magnitude {magnitude:.3e})"
        )


class NotClosed(EngineError):
    def __init__(self, residual: float):
        self.residual = residual
        super().__init__(f"form is not closed: |d omega| = {residual:.3e}")


class HarmonicObstruction(EngineError):
    """A closed form has a nonzero harmonic part, so it is not exact.

    This is a finding about the input rather than a malfunction; the harmonic
    residual is kept on the exception.
    """

    def __init__(self, residual: float):
        self.residual = residual
        super().__init__(f"closed form has harmonic part of size {residual:.3e}")


class TooManyOddArguments(EngineError):
    pass


class EndpointsNotFixed(EngineError):
    pass


class NotFlat(EngineError):
    """A connection, path or sheet expected to be flat has curvature."""

    def __init__(self, residual: float, what: str = "connection"):
        self.residual = residual
        super().__init__(f"{what} is not flat: curvature residual {residual:.3e}")


class NotFlatFamily(NotFlat):
    def __init__(self, residual: float):
        super().__init__(residual, "path of connections")


class NotFlatSheet(NotFlat):
    def __init__(self, residual: float):
        super().__init__(residual, "sheet of connections")


class StokesViolation(EngineError):
    def __init__(self, residual: float, what: str):
        self.residual = residual
        super().__init__(f"{what}: Stokes residual {residual:.3e}")


class ParseError(EngineError):
    def __init__(self, path: str, line: int, column: int, msg: str):
        self.path = path
        self.line = line
        self.column = column
        super().__init__(f"{path}:{line}:{column}: {msg}")


class SchemaError(EngineError):
    def __init__(self, key: str, msg: str = ""):
        self.key = key
        super().__init__(f"{key}: {msg}" if msg else key)
