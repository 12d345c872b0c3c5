"""Noisy reference/surveillance snapshots from the vector data model."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigError
from .scene import DelayDoppler
from .signal_core import IoWaveform, WaveformSpec, clutter_basis, doppler_vector

RC_STREAM = 0
SC_STREAM = 1


@dataclass(frozen=True)
class NodeScenario:
    """Amplitudes, clutter taps, noise levels and target of one receiver node."""

    a: complex
    b: complex
    d: complex
    c: np.ndarray
    sigma_n2: float
    sigma_e2: float
    waveform_spec: WaveformSpec
    target: DelayDoppler

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.c, dtype=complex))
        object.__setattr__(self, "c", c)
        spec = self.waveform_spec
        if self.sigma_n2 < 0 or self.sigma_e2 < 0:
            raise ConfigError("noise variances must be non-negative")
        if c.size > spec.max_delay_samples:
            raise ConfigError(
                f"clutter length L={c.size} exceeds max delay M={spec.max_delay_samples}"
            )
        if self.target.tau > spec.max_delay_samples * spec.dt * (1 + 1e-12):
            raise ConfigError(
                f"target delay {self.target.tau:.4e} s lies outside the reference support "
                f"M*dt = {spec.max_delay_samples * spec.dt:.4e} s"
            )

    @property
    def n_clutter_taps(self) -> int:
        return self.c.size

    def replace(self, **changes) -> "NodeScenario":
        return replace(self, **changes)


@dataclass(frozen=True)
class ChannelSnapshot:
    x_ref: np.ndarray
    y_surv: np.ndarray

    def __post_init__(self):
        if self.x_ref.ndim != 1 or self.y_surv.ndim != 1 or self.x_ref.size < self.y_surv.size:
            raise ConfigError("snapshot must hold a reference of length M+N and surveillance of length N")

    @property
    def n_samples(self) -> int:
        return self.y_surv.size

    @property
    def max_delay_samples(self) -> int:
        return self.x_ref.shape[0] - self.n_samples


def complex_wgn(n: int, variance: float, rng: np.random.Generator) -> np.ndarray:
    """Circular complex white Gaussian noise with E|w|^2 = variance."""
    if variance < 0:
        raise ConfigError("noise variance must be non-negative")
    if variance == 0:
        return np.zeros(n, dtype=complex)
    z = rng.standard_normal((2, n))
    return np.sqrt(variance / 2.0) * (z[0] + 1j * z[1])


def stream(seed, *key: int) -> np.random.Generator:
    """Counter-keyed generator: independent of the order streams are requested in."""
    if isinstance(seed, np.random.SeedSequence):
        ss = np.random.SeedSequence(seed.entropy, spawn_key=tuple(seed.spawn_key) + key)
    else:
        ss = np.random.SeedSequence(int(seed), spawn_key=key)
    return np.random.default_rng(ss)


@dataclass(frozen=True)
class CleanChannels:
    """Noise-free reference and surveillance signals; noise is added per draw."""

    x_ref: np.ndarray
    y_surv: np.ndarray
    sigma_n2: float
    sigma_e2: float

    def draw(self, seed) -> ChannelSnapshot:
        n = complex_wgn(self.x_ref.size, self.sigma_n2, stream(seed, RC_STREAM))
        e = complex_wgn(self.y_surv.size, self.sigma_e2, stream(seed, SC_STREAM))
        return ChannelSnapshot(self.x_ref + n, self.y_surv + e)


def clean_channels(w: IoWaveform, sc: NodeScenario) -> CleanChannels:
    spec = w.spec
    if spec != sc.waveform_spec:
        raise ConfigError("scenario waveform spec does not match the waveform")
    N, M, L = spec.n_samples, spec.max_delay_samples, sc.n_clutter_taps
    s_ref = w.samples(-M, N - 1)
    s = s_ref[M:]
    y = sc.b * s
    if L > 0:
        S = clutter_basis(s_ref[M - L :], N, L).matrix[:, 1:]
        y = y + S @ sc.c
    v = doppler_vector(sc.target.omega, N, spec.dt)
    y = y + sc.d * w.samples(0, N - 1, sc.target.tau) * v
    return CleanChannels(sc.a * s_ref, y, sc.sigma_n2, sc.sigma_e2)


def synthesize(w: IoWaveform, sc: NodeScenario, seed) -> ChannelSnapshot:
    """x_ref = a s^R + n over n = -M..N-1; y = b s + S c + d s(tau) v(omega) + e."""
    return clean_channels(w, sc).draw(seed)
