"""Exception hierarchy shared by every radarlab module."""


class RadarLabError(Exception):
    """Base class for all radarlab errors."""


class ConfigError(RadarLabError, ValueError):
    """Invalid configuration or out-of-contract parameters."""


class GeometryError(RadarLabError, ValueError):
    """Degenerate bistatic geometry (coincident points, zero ranges)."""


class DegenerateError(RadarLabError, ArithmeticError):
    """A matrix or vector is numerically rank deficient.

    ``value`` carries the offending quantity (a singular value or a
    projected norm) so callers can report it.
    """

    def __init__(self, message: str, value: float | None = None):
        super().__init__(message)
        self.value = value


class DegenerateWaveformError(DegenerateError):
    """The waveform does not yield a full-rank interference basis."""


class DegenerateBasisError(DegenerateError):
    """An interference basis handed to the canceller is rank deficient."""


class DegenerateSteeringError(DegenerateError):
    """The steering vector lies (numerically) inside the cancelled span."""


class TargetInClutterSpanError(DegenerateError):
    """The noise-free steering vector is annihilated by the clutter projector."""


class IdentifiabilityError(RadarLabError, ArithmeticError):
    """The Fisher-type matrix H is singular: parameters are not identifiable."""


class UnderdeterminedError(RadarLabError, ValueError):
    """Too few observables for the requested parameter vector."""


class OptimizerError(RadarLabError, RuntimeError):
    """Non-finite objective encountered during a simplex search."""

    def __init__(self, message: str, point=None):
        super().__init__(message)
        self.point = point
