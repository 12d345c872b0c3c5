"""Interference cancellation, delay-Doppler criterion, search and refinement.

Each receiver node cancels direct-path and clutter interference by projecting
the surveillance data onto the orthogonal complement of the reference-channel
Toeplitz basis, then scores hypotheses (tau, omega) with the normalised
ambiguity criterion

    P(tau, omega) = |a^H Pi y|^2 / (a^H Pi a),   a = x(tau) * v(omega)

where x(tau) is the measured reference delayed by tau. Refinement minimises
the equivalent concentrated residual ||Pi y||^2 - P, which stays accurate to
working precision near the optimum.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import ndimage, optimize

from .errors import (
    ConfigError,
    DegenerateBasisError,
    DegenerateSteeringError,
    OptimizerError,
    UnderdeterminedError,
)
from .scene import NodeGeometry, TargetState, delay_doppler, is_identifiable
from .signal_core import RANK_TOL, InterferenceBasis, WaveformSpec, clutter_basis
from .synth import ChannelSnapshot

STEERING_EPS = 1e-12


# --------------------------------------------------------------------------
# cancellation and the per-node criterion


@dataclass(frozen=True)
class Canceller:
    """Orthonormal basis Q of the interference span; projects with y - Q Q^H y."""

    basis: np.ndarray
    source: str = "reference"

    def project(self, v: np.ndarray) -> np.ndarray:
        Q = self.basis
        return v - Q @ (Q.conj().T @ v)


def build_canceller(basis: InterferenceBasis, source: str = "reference") -> Canceller:
    if source not in ("reference", "noise-free"):
        raise ConfigError(f"unknown canceller source {source!r}")
    Q, R = np.linalg.qr(basis.matrix)
    sv = np.linalg.svd(R, compute_uv=False)
    if sv[-1] <= RANK_TOL * sv[0]:
        raise DegenerateBasisError(
            f"interference basis rank deficient (singular value {sv[-1]:.3e})", value=float(sv[-1])
        )
    return Canceller(Q, source)


def criterion(y: np.ndarray, a_hat: np.ndarray, c: Canceller) -> float:
    """Interference-cancelled, normalised ambiguity value for one steering vector."""
    u = c.project(a_hat)
    uu = np.vdot(u, u).real
    if uu <= STEERING_EPS * np.vdot(a_hat, a_hat).real:
        raise DegenerateSteeringError("steering vector lies inside the interference span", value=uu)
    return float(abs(np.vdot(u, y)) ** 2 / uu)


class ReferenceInterpolator:
    """Fractional delays of the measured reference over its N+M sample support.

    The support is treated as one period of a trigonometric polynomial
    (DFT interpolation). Integer delays reduce to exact index shifts and the
    transform is unitary, so white reference noise stays white.
    """

    def __init__(self, x_ref: np.ndarray, n_samples: int, dt: float):
        self.x_ref = np.asarray(x_ref, dtype=complex)
        self.P = self.x_ref.size
        self.N = n_samples
        self.M = self.P - n_samples
        self.dt = dt
        self._spectrum = np.fft.fft(self.x_ref)
        self._k = np.fft.fftfreq(self.P, d=1.0 / self.P)
        self._nyquist = self.P // 2 if self.P % 2 == 0 else None

    def _phase(self, shift: float) -> np.ndarray:
        phase = np.exp(-2j * np.pi * self._k * shift / self.P)
        if self._nyquist is not None:
            phase[self._nyquist] = np.cos(np.pi * shift)
        return phase

    def delayed(self, tau: float) -> np.ndarray:
        """x(t_n - tau) for n = 0..N-1."""
        shift = tau / self.dt
        m = round(shift)
        if abs(shift - m) < 1e-13 and 0 <= m <= self.M:
            return self.x_ref[self.M - m : self.M - m + self.N]
        full = np.fft.ifft(self._spectrum * self._phase(shift))
        return full[self.M : self.M + self.N]

    def apply_delay(self, vec: np.ndarray, tau: float) -> np.ndarray:
        """Same fractional-delay operator applied to any support-length vector."""
        full = np.fft.ifft(np.fft.fft(vec) * self._phase(tau / self.dt))
        return full[self.M : self.M + self.N]

    def apply_delay_adjoint(self, g: np.ndarray, tau: float) -> np.ndarray:
        buf = np.zeros(self.P, dtype=complex)
        buf[self.M : self.M + self.N] = g
        return np.fft.ifft(np.fft.fft(buf) * self._phase(tau / self.dt).conj())


@dataclass(frozen=True)
class DelayDopplerGrid:
    tau_axis: np.ndarray
    omega_axis: np.ndarray

    @classmethod
    def from_bins(
        cls,
        spec: WaveformSpec,
        tau_samples: Sequence[float],
        doppler_bins: Sequence[float],
    ) -> "DelayDopplerGrid":
        """Axes given in delay samples and DFT bins (2*pi/T)."""
        return cls(
            np.asarray(tau_samples, dtype=float) * spec.dt,
            np.asarray(doppler_bins, dtype=float) * spec.doppler_bin,
        )

    @property
    def shape(self) -> tuple[int, int]:
        return self.tau_axis.size, self.omega_axis.size

    @property
    def spacing(self) -> np.ndarray:
        def step(ax):
            return float(ax[1] - ax[0]) if ax.size > 1 else 1.0

        return np.array([step(self.tau_axis), step(self.omega_axis)])


@dataclass(frozen=True)
class AmbiguitySurface:
    tau_axis: np.ndarray
    omega_axis: np.ndarray
    values: np.ndarray
    masked: np.ndarray

    @property
    def peak(self) -> tuple[tuple[int, int], float]:
        vals = np.where(self.masked, -np.inf, self.values)
        i, j = np.unravel_index(int(np.argmax(vals)), vals.shape)
        return (int(i), int(j)), float(self.values[i, j])

    @property
    def peak_point(self) -> np.ndarray:
        (i, j), _ = self.peak
        return np.array([self.tau_axis[i], self.omega_axis[j]])


class NodeProcessor:
    """Per-node state shared by surface evaluation, refinement and global search."""

    def __init__(self, snapshot: ChannelSnapshot, n_clutter_taps: int, dt: float):
        N, M, L = snapshot.n_samples, snapshot.max_delay_samples, n_clutter_taps
        if L > M:
            raise ConfigError(f"clutter taps L={L} exceed reference history M={M}")
        self.N, self.M, self.L, self.dt = N, M, L, dt
        self.snapshot = snapshot
        basis = clutter_basis(snapshot.x_ref[M - L :], N, L)
        self.canceller = build_canceller(basis, "reference")
        self.z = self.canceller.project(snapshot.y_surv)
        self.zz = float(np.vdot(self.z, self.z).real)
        self.reference = ReferenceInterpolator(snapshot.x_ref, N, dt)
        self._t = dt * np.arange(N)

    @property
    def tau_limits(self) -> tuple[float, float]:
        return 0.0, self.M * self.dt

    def steering(self, tau: float, omega: float) -> np.ndarray:
        return self.reference.delayed(tau) * np.exp(1j * omega * self._t)

    def criterion(self, tau: float, omega: float) -> float:
        return criterion(self.z, self.steering(tau, omega), self.canceller)

    def residual(self, tau: float, omega: float) -> float:
        """||Pi y||^2 - P(tau, omega), evaluated as a residual norm."""
        a = self.steering(tau, omega)
        u = self.canceller.project(a)
        uu = np.vdot(u, u).real
        if uu <= STEERING_EPS * np.vdot(a, a).real:
            raise DegenerateSteeringError("steering vector lies inside the interference span", value=uu)
        r = self.z - u * (np.vdot(u, self.z) / uu)
        return float(np.vdot(r, r).real)

    def surface(self, grid: DelayDopplerGrid) -> AmbiguitySurface:
        Q = self.canceller.basis
        Qc = Q.conj()
        V = np.exp(1j * np.outer(self._t, grid.omega_axis))
        Vh = V.conj().T
        values = np.zeros(grid.shape)
        masked = np.zeros(grid.shape, dtype=bool)
        for i, tau in enumerate(grid.tau_axis):
            x = self.reference.delayed(tau)
            num = np.abs(Vh @ (x.conj() * self.z)) ** 2
            aa = np.vdot(x, x).real
            qa = (Qc * x[:, None]).T @ V
            uu = aa - np.sum(np.abs(qa) ** 2, axis=0)
            bad = uu <= STEERING_EPS * aa
            masked[i] = bad
            values[i] = np.where(bad, 0.0, num / np.where(bad, 1.0, uu))
        return AmbiguitySurface(grid.tau_axis, grid.omega_axis, values, masked)


def ambiguity_surface(
    snapshot: ChannelSnapshot, grid: DelayDopplerGrid, n_clutter_taps: int, dt: float
) -> AmbiguitySurface:
    return NodeProcessor(snapshot, n_clutter_taps, dt).surface(grid)


def threshold_peaks(surface: AmbiguitySurface, threshold: float) -> list[tuple[float, float, float]]:
    """Unmasked local maxima (8-neighbourhood) strictly above ``threshold``, largest first."""
    if threshold < 0:
        raise ConfigError("threshold must be non-negative")
    vals = np.where(surface.masked, -np.inf, surface.values)
    local_max = ndimage.maximum_filter(vals, size=3, mode="constant", cval=-np.inf)
    hits = np.argwhere((vals == local_max) & (vals > threshold))
    peaks = [(float(surface.tau_axis[i]), float(surface.omega_axis[j]), float(vals[i, j])) for i, j in hits]
    peaks.sort(key=lambda p: -p[2])
    return peaks


# --------------------------------------------------------------------------
# simplex refinement


@dataclass(frozen=True)
class EstimateResult:
    """Refined estimate: (tau, omega) for a node or the 4D state for global mode."""

    point: np.ndarray
    criterion_value: float
    iterations: int
    converged: bool
    grid_point: np.ndarray | None = None
    evaluations: int = 0
    extras: dict = field(default_factory=dict)

    @property
    def tau(self) -> float:
        return float(self.point[0])

    @property
    def omega(self) -> float:
        return float(self.point[1])


def refine(
    objective: Callable[[np.ndarray], float],
    start,
    scale,
    *,
    maximize: bool = True,
    tol: float = 1e-6,
    max_iter: int = 500,
) -> EstimateResult:
    """Nelder-Mead search (reflection 1, expansion 2, contraction 0.5, shrink 0.5).

    The simplex starts at ``start`` plus one ``scale`` offset per axis and
    works in coordinates normalised by ``scale``. Convergence means every
    vertex lies within ``tol * scale`` of the best vertex along every axis.
    """
    start = np.asarray(start, dtype=float)
    scale = np.asarray(scale, dtype=float)
    sign = -1.0 if maximize else 1.0
    n = start.size

    def fun(u):
        x = start + u * scale
        f = objective(x)
        if not np.isfinite(f):
            raise OptimizerError(f"non-finite objective {f} at {x}", point=x)
        return sign * f

    if not np.isfinite(objective(start)):
        raise OptimizerError("objective not finite at the start point", point=start)
    simplex = np.vstack([np.zeros(n), np.eye(n)])
    res = optimize.minimize(
        fun,
        np.zeros(n),
        method="Nelder-Mead",
        options={
            "initial_simplex": simplex,
            "xatol": tol,
            "fatol": np.inf,
            "maxiter": max_iter,
            "maxfev": 10 * max_iter,
        },
    )
    point = start + res.x * scale
    return EstimateResult(point, sign * float(res.fun), int(res.nit), bool(res.success), evaluations=int(res.nfev))


def _node_residual(proc: NodeProcessor, tau: float, omega: float) -> float:
    try:
        return proc.residual(tau, omega)
    except DegenerateSteeringError:
        return proc.zz


def estimate_node(
    snapshot: ChannelSnapshot,
    grid: DelayDopplerGrid,
    n_clutter_taps: int,
    dt: float,
    *,
    do_refine: bool = True,
    tol: float = 1e-6,
    max_iter: int = 500,
    processor: NodeProcessor | None = None,
) -> EstimateResult:
    """Grid argmax of the criterion, then simplex refinement around it."""
    proc = processor or NodeProcessor(snapshot, n_clutter_taps, dt)
    surf = proc.surface(grid)
    start = surf.peak_point
    if not do_refine:
        return EstimateResult(start, surf.peak[1], 0, True, grid_point=start)
    res = refine(
        lambda p: -_node_residual(proc, p[0], p[1]),
        start,
        grid.spacing,
        tol=tol,
        max_iter=max_iter,
    )
    return EstimateResult(
        res.point,
        proc.zz + res.criterion_value,
        res.iterations,
        res.converged,
        grid_point=start,
        evaluations=res.evaluations,
    )


# --------------------------------------------------------------------------
# global combination over nodes


@dataclass
class GlobalNode:
    processor: NodeProcessor
    geometry: NodeGeometry
    weight: float = 1.0


def global_terms(theta, nodes: Sequence[GlobalNode]) -> tuple[np.ndarray, np.ndarray]:
    """Per-node weighted criterion at the mapped (tau_k, omega_k) and a missing flag.

    A node whose mapped delay falls outside its reference support or whose
    steering is degenerate contributes zero and is flagged.
    """
    state = TargetState.from_vector(theta)
    terms = np.zeros(len(nodes))
    missing = np.zeros(len(nodes), dtype=bool)
    for k, node in enumerate(nodes):
        proc = node.processor
        dd = delay_doppler(node.geometry, state)
        lo, hi = proc.tau_limits
        if not lo <= dd.tau <= hi:
            missing[k] = True
            continue
        try:
            terms[k] = node.weight * proc.criterion(dd.tau, dd.omega)
        except DegenerateSteeringError:
            missing[k] = True
    return terms, missing


def global_likelihood(theta, nodes: Sequence[GlobalNode]) -> float:
    if len(nodes) < 1:
        raise ConfigError("at least one node is required")
    return float(global_terms(theta, nodes)[0].sum())


def _global_residual(theta, nodes: Sequence[GlobalNode]) -> float:
    # sum_k w_k (||Pi_k y_k||^2 - P_k): constant minus the global likelihood
    state = TargetState.from_vector(theta)
    total = 0.0
    for node in nodes:
        proc = node.processor
        dd = delay_doppler(node.geometry, state)
        lo, hi = proc.tau_limits
        if lo <= dd.tau <= hi:
            total += node.weight * _node_residual(proc, dd.tau, dd.omega)
        else:
            total += node.weight * proc.zz
    return total


def estimate_global(
    nodes: Sequence[GlobalNode],
    theta_grid: Sequence[np.ndarray],
    *,
    tol: float = 1e-6,
    max_iter: int = 500,
) -> EstimateResult:
    """Coarse 4D grid scan of the global likelihood, then simplex refinement."""
    axes = [np.asarray(ax, dtype=float) for ax in theta_grid]
    if len(axes) != 4:
        raise ConfigError("theta grid needs four axes (x, y, vx, vy)")
    center = TargetState.from_vector([ax[ax.size // 2] for ax in axes])
    if not is_identifiable([n.geometry for n in nodes], center):
        raise UnderdeterminedError(
            f"{len(nodes)} node(s) give {2 * len(nodes)} observables; the stacked Jacobian "
            "does not reach rank 4"
        )
    mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, 4)
    scores = np.array([global_likelihood(th, nodes) for th in mesh])
    start = mesh[int(np.argmax(scores))]
    scale = np.array([ax[1] - ax[0] if ax.size > 1 else 1.0 for ax in axes])
    zz = sum(n.weight * n.processor.zz for n in nodes)
    res = refine(lambda th: -_global_residual(th, nodes), start, scale, tol=tol, max_iter=max_iter)
    return EstimateResult(
        res.point,
        zz + res.criterion_value,
        res.iterations,
        res.converged,
        grid_point=start,
        evaluations=res.evaluations,
    )
