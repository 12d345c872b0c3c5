"""Two-dimensional bistatic geometry: target state to per-node delay/Doppler."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, GeometryError

SPEED_OF_LIGHT = 299_792_458.0
DEFAULT_CARRIER = 600e6


@dataclass(frozen=True)
class NodeGeometry:
    io_position: np.ndarray
    rn_position: np.ndarray
    carrier_frequency: float = DEFAULT_CARRIER

    def __post_init__(self):
        io = np.asarray(self.io_position, dtype=float)
        rn = np.asarray(self.rn_position, dtype=float)
        object.__setattr__(self, "io_position", io)
        object.__setattr__(self, "rn_position", rn)
        if io.shape != (2,) or rn.shape != (2,):
            raise ConfigError("node positions must be 2-vectors")
        if np.linalg.norm(io - rn) == 0.0:
            raise GeometryError("IO and RN positions coincide")

    @property
    def baseline(self) -> float:
        return float(np.linalg.norm(self.io_position - self.rn_position))

    @property
    def wavenumber(self) -> float:
        """2*pi*f_c/c, converts range rate (m/s) to Doppler (rad/s)."""
        return 2.0 * np.pi * self.carrier_frequency / SPEED_OF_LIGHT


@dataclass(frozen=True)
class TargetState:
    position: np.ndarray
    velocity: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.position, dtype=float)
        v = np.asarray(self.velocity, dtype=float)
        object.__setattr__(self, "position", p)
        object.__setattr__(self, "velocity", v)
        if p.shape != (2,) or v.shape != (2,):
            raise ConfigError("target position and velocity must be 2-vectors")
        if not np.linalg.norm(v) > 0:
            raise ConfigError("target speed must be non-zero")

    @classmethod
    def from_vector(cls, theta) -> "TargetState":
        theta = np.asarray(theta, dtype=float)
        return cls(theta[:2], theta[2:4])

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.position, self.velocity])


@dataclass(frozen=True)
class DelayDoppler:
    tau: float
    omega: float

    def __post_init__(self):
        if self.tau < 0:
            raise ConfigError(f"delay must be non-negative, got {self.tau}")


def _legs(g: NodeGeometry, t: TargetState):
    r_io = t.position - g.io_position
    r_rn = t.position - g.rn_position
    R1 = np.linalg.norm(r_io)
    R2 = np.linalg.norm(r_rn)
    if R1 == 0.0 or R2 == 0.0:
        raise GeometryError("target coincides with the IO or RN position")
    return r_io / R1, R1, r_rn / R2, R2


def bistatic_range(g: NodeGeometry, position) -> float:
    """Excess path length |p - p_io| + |p - p_rn| - |p_io - p_rn| (meters)."""
    position = np.asarray(position, dtype=float)
    return float(
        np.linalg.norm(position - g.io_position)
        + np.linalg.norm(position - g.rn_position)
        - g.baseline
    )


def delay_doppler(g: NodeGeometry, t: TargetState) -> DelayDoppler:
    """Delay relative to the direct path and Doppler in rad/s."""
    u1, R1, u2, R2 = _legs(g, t)
    # clip rounding noise for targets on the baseline segment
    tau = max((R1 + R2 - g.baseline) / SPEED_OF_LIGHT, 0.0)
    range_rate = float((u1 + u2) @ t.velocity)
    return DelayDoppler(tau, -g.wavenumber * range_rate)


def jacobian(g: NodeGeometry, t: TargetState) -> np.ndarray:
    """2x4 matrix d(tau, omega)/d(x, y, vx, vy)."""
    u1, R1, u2, R2 = _legs(g, t)
    v = t.velocity
    eye = np.eye(2)
    J = np.zeros((2, 4))
    J[0, :2] = (u1 + u2) / SPEED_OF_LIGHT
    d_rate_dp = (eye - np.outer(u1, u1)) @ v / R1 + (eye - np.outer(u2, u2)) @ v / R2
    J[1, :2] = -g.wavenumber * d_rate_dp
    J[1, 2:] = -g.wavenumber * (u1 + u2)
    return J


def stacked_jacobian(geometries, t: TargetState) -> np.ndarray:
    return np.vstack([jacobian(g, t) for g in geometries])


def is_identifiable(geometries, t: TargetState, rtol: float = 1e-9) -> bool:
    """True when the stacked 2K x 4 Jacobian has rank 4 at ``t``.

    Rows are normalised first so delay (s/m) and Doppler (rad/s per m/s)
    rows of very different magnitude are weighed evenly.
    """
    J = stacked_jacobian(geometries, t)
    norms = np.linalg.norm(J, axis=1, keepdims=True)
    J = J / np.where(norms > 0, norms, 1.0)
    sv = np.linalg.svd(J, compute_uv=False)
    return sv.size >= 4 and sv[3] > rtol * sv[0]


@dataclass(frozen=True)
class Gains:
    """Antenna/receiver gains entering the bistatic radar equation.

    ``sc_direct`` is the surveillance antenna's gain toward the IO (the DPI
    leakage path); it is typically far below ``sc_target``.
    """

    transmit: float = 1.0
    rc: float = 1.0
    sc_direct: float = 1e-3
    sc_target: float = 1.0


def bistatic_amplitudes(
    g: NodeGeometry,
    t: TargetState,
    transmit_power: float,
    rcs: float,
    gains: Gains = Gains(),
    seed: int = 0,
) -> tuple[complex, complex, complex]:
    """Reference (a), DPI (b) and target (d) amplitudes from the radar equation.

    Magnitudes are amplitude square roots of received powers; phases are
    drawn uniformly from ``seed``.
    """
    if not transmit_power > 0 or not rcs > 0:
        raise ConfigError("transmit power and RCS must be positive")
    _, R1, _, R2 = _legs(g, t)
    Rb = g.baseline
    lam = SPEED_OF_LIGHT / g.carrier_frequency
    direct = transmit_power * gains.transmit * lam**2 / ((4 * np.pi) ** 2 * Rb**2)
    echo = transmit_power * gains.transmit * gains.sc_target * rcs * lam**2 / (
        (4 * np.pi) ** 3 * R1**2 * R2**2
    )
    mags = np.sqrt([direct * gains.rc, direct * gains.sc_direct, echo])
    phases = np.random.default_rng(seed).uniform(0, 2 * np.pi, 3)
    a, b, d = mags * np.exp(1j * phases)
    return complex(a), complex(b), complex(d)


def sigma2_for_snr(amplitude: complex, snr_db: float) -> float:
    """Noise variance giving |amplitude|^2 / sigma^2 = snr_db."""
    return float(abs(amplitude) ** 2 / 10.0 ** (snr_db / 10.0))
