"""Illuminator waveform model and steering-vector machinery.

The illuminator waveform is a random bandlimited Fourier series whose
fundamental period equals the reference-channel support ``(N + M)`` samples.
Delayed copies and their delay derivatives are therefore exact at any
(fractional) delay, and a length ``N + M`` DFT of the sampled reference
represents the noise-free part without error.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DegenerateWaveformError

RANK_TOL = 1e-8


@dataclass(frozen=True)
class WaveformSpec:
    """Sampling and bandwidth parameters of the illuminator waveform.

    Attributes
    ----------
    bandwidth : float
        Two-sided bandwidth B in Hz; spectral support is [-B/2, B/2].
    sample_rate : float
        Baseband sample rate 1/dt in Hz.
    n_samples : int
        Surveillance-channel length N.
    max_delay_samples : int
        Maximum delay of interest M; the reference channel covers n = -M..N-1.
    power : float
        Mean |s|^2 over the reference support.
    floor_db : float or None
        Power spectral density of out-of-band harmonics relative to the
        in-band density (e.g. a transmitter's stopband). ``None`` gives a
        strictly bandlimited series, whose Toeplitz basis is numerically
        rank deficient once L+1 exceeds a few times B/fs * (L+1).
    """

    bandwidth: float
    sample_rate: float
    n_samples: int
    max_delay_samples: int
    power: float = 1.0
    floor_db: float | None = -30.0

    def __post_init__(self):
        if self.sample_rate <= 0:
            raise ConfigError(f"sample_rate must be positive, got {self.sample_rate}")
        if self.bandwidth < 0 or self.bandwidth > self.sample_rate:
            raise ConfigError(
                f"bandwidth {self.bandwidth} Hz must lie in [0, sample_rate={self.sample_rate}]"
            )
        if int(self.n_samples) <= 0:
            raise ConfigError(f"n_samples must be positive, got {self.n_samples}")
        if int(self.max_delay_samples) < 0:
            raise ConfigError(f"max_delay_samples must be >= 0, got {self.max_delay_samples}")
        if not self.power > 0:
            raise ConfigError(f"power must be positive, got {self.power}")

    @property
    def dt(self) -> float:
        return 1.0 / self.sample_rate

    @property
    def duration(self) -> float:
        """Surveillance observation time T = N * dt."""
        return self.n_samples * self.dt

    @property
    def period_samples(self) -> int:
        """Length of the reference support, also the waveform period."""
        return self.n_samples + self.max_delay_samples

    @property
    def doppler_bin(self) -> float:
        """One DFT bin of the surveillance window, 2*pi/T in rad/s."""
        return 2.0 * np.pi / self.duration


@dataclass(frozen=True)
class IoWaveform:
    """Bandlimited Fourier series s(t) = sum_k c_k exp(j 2 pi f_k t)."""

    fourier_coefficients: np.ndarray
    frequency_grid: np.ndarray
    spec: WaveformSpec
    _bins: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        spec = self.spec
        P = spec.period_samples
        # integer harmonic index of each grid frequency on the period-P lattice
        bins = np.rint(self.frequency_grid * P * spec.dt).astype(np.int64)
        object.__setattr__(self, "_bins", bins)

    def evaluate(self, t) -> np.ndarray:
        """Direct series evaluation at arbitrary times (seconds)."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        phase = np.exp(2j * np.pi * np.outer(t, self.frequency_grid))
        return phase @ self.fourier_coefficients

    def _period_samples(self, tau: float, derivative: bool) -> np.ndarray:
        spec = self.spec
        P = spec.period_samples
        coef = self.fourier_coefficients * np.exp(-2j * np.pi * self.frequency_grid * tau)
        if derivative:
            # d/dtau s(t - tau) = -s'(t - tau)
            coef = coef * (-2j * np.pi * self.frequency_grid)
        spectrum = np.zeros(P, dtype=complex)
        np.add.at(spectrum, self._bins % P, coef)
        return np.fft.ifft(spectrum) * P

    def samples(self, n_from: int, n_to: int, tau: float = 0.0, derivative: bool = False) -> np.ndarray:
        """Samples s(t_n - tau) for n = n_from..n_to inclusive (or their tau-derivative)."""
        period = self._period_samples(tau, derivative)
        idx = np.arange(n_from, n_to + 1) % self.spec.period_samples
        return period[idx]


def generate_waveform(spec: WaveformSpec, seed: int) -> IoWaveform:
    """Draw a random in-band Fourier series normalised to ``spec.power``.

    Coefficients are i.i.d. circular complex Gaussian on the harmonics
    k / (P dt) with |f| <= B/2 (both endpoints included, DC allowed).
    """
    P = spec.period_samples
    df = 1.0 / (P * spec.dt)
    k_max = int(np.floor(spec.bandwidth / 2.0 / df * (1 + 1e-12)))
    if spec.floor_db is None:
        harmonics = np.arange(-k_max, k_max + 1)
    else:
        # the Nyquist harmonic is left out: its fractional delay is not unique
        harmonics = np.arange(-((P - 1) // 2), (P - 1) // 2 + 1)
    freqs = harmonics * df
    rng = np.random.default_rng(seed)
    coef = (rng.standard_normal(freqs.size) + 1j * rng.standard_normal(freqs.size)) / np.sqrt(2)
    if spec.floor_db is not None:
        coef[np.abs(harmonics) > k_max] *= 10.0 ** (spec.floor_db / 20.0)
    w = IoWaveform(coef, freqs, spec)
    s = w.samples(-spec.max_delay_samples, spec.n_samples - 1)
    scale = np.sqrt(spec.power / np.mean(np.abs(s) ** 2))
    return IoWaveform(coef * scale, freqs, spec)


def sample_delayed(w: IoWaveform, tau: float, n_from: int, n_to: int) -> np.ndarray:
    """Exact samples s(t_n - tau), n = n_from..n_to inclusive."""
    return w.samples(n_from, n_to, tau)


def doppler_vector(omega: float, N: int, dt: float) -> np.ndarray:
    """DFT-type Doppler vector exp(j omega n dt), n = 0..N-1."""
    return np.exp(1j * omega * dt * np.arange(N))


@dataclass(frozen=True)
class SteeringContext:
    tau: float
    omega: float
    values: np.ndarray
    d_tau: np.ndarray
    d_omega: np.ndarray


def steering(w: IoWaveform, tau: float, omega: float) -> SteeringContext:
    """Steering vector a(tau, omega) = s(tau) * v(omega) and its exact partials."""
    spec = w.spec
    N = spec.n_samples
    v = doppler_vector(omega, N, spec.dt)
    t = spec.dt * np.arange(N)
    values = w.samples(0, N - 1, tau) * v
    d_tau = w.samples(0, N - 1, tau, derivative=True) * v
    return SteeringContext(tau, omega, values, d_tau, 1j * t * values)


@dataclass(frozen=True)
class InterferenceBasis:
    """Direct-path plus clutter basis [s, S]: column l holds samples at t_{n-l}."""

    matrix: np.ndarray
    n_clutter_taps: int


def clutter_basis(samples: np.ndarray, N: int, L: int) -> InterferenceBasis:
    """Toeplitz basis from a vector covering indices -L..N-1.

    Works on exact waveform samples (noise-free S_I) and on measured
    reference samples (X_I) alike.
    """
    if L < 0 or L >= N - 1:
        raise ConfigError(f"clutter taps L={L} must satisfy 0 <= L < N-1 (N={N})")
    samples = np.asarray(samples)
    if samples.shape != (N + L,):
        raise ConfigError(f"expected {N + L} samples covering -L..N-1, got {samples.shape}")
    windows = np.lib.stride_tricks.sliding_window_view(samples, N)
    matrix = np.ascontiguousarray(windows[L::-1].T)
    # singular values of R equal those of the tall matrix
    sv = np.linalg.svd(np.linalg.qr(matrix, mode="r"), compute_uv=False)
    if sv[-1] <= RANK_TOL * sv[0]:
        raise DegenerateWaveformError(
            f"interference basis is rank deficient: smallest singular value {sv[-1]:.3e} "
            f"vs largest {sv[0]:.3e}",
            value=float(sv[-1]),
        )
    return InterferenceBasis(matrix, L)


def unambiguity_probe(w: IoWaveform, tau_values, omega_values) -> float:
    """Largest normalised inner product between distinct probe-grid steering vectors.

    Pairs are compared only when they differ by at least one grid cell along
    some axis; values below 1 indicate the steering family is unambiguous
    over the probed range.
    """
    vecs = []
    for tau in tau_values:
        for omega in omega_values:
            a = steering(w, tau, omega).values
            vecs.append(a / np.linalg.norm(a))
    A = np.array(vecs)
    G = np.abs(A.conj() @ A.T)
    np.fill_diagonal(G, 0.0)
    return float(G.max())
