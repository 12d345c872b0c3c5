"""Seeded Monte Carlo campaigns: empirical RMSE versus the first-order theory."""

from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .analysis import AnalysisNode, CovarianceReport, total_covariance
from .errors import ConfigError
from .estimator import DelayDopplerGrid, NodeProcessor, estimate_node
from .signal_core import IoWaveform, WaveformSpec, generate_waveform
from .synth import NodeScenario, clean_channels

SWEEP_AXES = ("sc_snr_db", "rc_snr_db", "none")


@dataclass(frozen=True)
class GridSpec:
    """Search grid in natural units: delay samples and DFT bins (inclusive ranges)."""

    tau_start: float = 0.0
    tau_stop: float | None = None
    tau_step: float = 1.0
    doppler_start: float = -6.0
    doppler_stop: float = 6.0
    doppler_step: float = 1.0

    def build(self, spec: WaveformSpec) -> DelayDopplerGrid:
        tau_stop = spec.max_delay_samples if self.tau_stop is None else self.tau_stop
        taus = _inclusive(self.tau_start, tau_stop, self.tau_step)
        bins = _inclusive(self.doppler_start, self.doppler_stop, self.doppler_step)
        return DelayDopplerGrid.from_bins(spec, taus, bins)


def _inclusive(start: float, stop: float, step: float) -> np.ndarray:
    if step <= 0 or stop < start:
        raise ConfigError(f"bad grid axis start={start} stop={stop} step={step}")
    n = int(math.floor((stop - start) / step + 1e-9)) + 1
    return start + step * np.arange(n)


@dataclass(frozen=True)
class CampaignConfig:
    """Everything one campaign needs; SNRs follow |d|^2/sigma_e^2 and |a|^2/sigma_n^2."""

    scenario: NodeScenario
    n_trials: int
    sweep_axis: str = "none"
    sweep_values: tuple[float, ...] = ()
    root_seed: int = 0
    waveform_seed: int = 1
    grid: GridSpec = GridSpec()
    refine: bool = True
    tol: float = 1e-6
    max_iter: int = 500
    z_variant: str = "verbatim"
    threads: int = 1

    def __post_init__(self):
        if self.n_trials <= 0:
            raise ConfigError("n_trials must be positive")
        if self.sweep_axis not in SWEEP_AXES:
            raise ConfigError(f"sweep_axis must be one of {SWEEP_AXES}")
        if self.sweep_axis != "none" and not self.sweep_values:
            raise ConfigError("a sweep axis needs sweep values")
        if not all(math.isfinite(v) for v in self.sweep_values):
            raise ConfigError("sweep values must be finite")

    def points(self) -> list[tuple[float, NodeScenario]]:
        sc = self.scenario
        if self.sweep_axis == "none":
            return [(math.nan, sc)]
        out = []
        for v in self.sweep_values:
            if self.sweep_axis == "sc_snr_db":
                out.append((v, replace(sc, sigma_e2=abs(sc.d) ** 2 / 10 ** (v / 10))))
            else:
                out.append((v, replace(sc, sigma_n2=abs(sc.a) ** 2 / 10 ** (v / 10))))
        return out


@dataclass(frozen=True)
class PointResult:
    sweep_value: float
    rmse: np.ndarray
    bias: np.ndarray
    n_ok: int
    n_outlier: int
    sqrt_crb: np.ndarray
    sqrt_total: np.ndarray
    wall_time: float = field(default=0.0, compare=False)
    errors: np.ndarray | None = field(default=None, repr=False, compare=False)


@dataclass(frozen=True)
class McReport:
    sweep_axis: str
    points: list[PointResult]
    theory: list[CovarianceReport] = field(default_factory=list, repr=False, compare=False)

    CSV_COLUMNS = (
        "sweep_db",
        "rmse_tau_s",
        "rmse_omega_rad_s",
        "sqrt_crb_tau",
        "sqrt_crb_omega",
        "sqrt_total_tau",
        "sqrt_total_omega",
        "n_ok",
        "n_outlier",
    )

    def rows(self) -> list[list]:
        return [
            [
                p.sweep_value,
                p.rmse[0],
                p.rmse[1],
                p.sqrt_crb[0],
                p.sqrt_crb[1],
                p.sqrt_total[0],
                p.sqrt_total[1],
                p.n_ok,
                p.n_outlier,
            ]
            for p in self.points
        ]

    def to_csv(self) -> str:
        lines = [",".join(self.CSV_COLUMNS)]
        for row in self.rows():
            lines.append(",".join(repr(float(x)) if isinstance(x, float) else str(x) for x in row))
        return "\n".join(lines) + "\n"


@dataclass
class _PointState:
    waveform: IoWaveform
    scenario: NodeScenario
    grid: DelayDopplerGrid
    refine: bool
    tol: float
    max_iter: int

    def __post_init__(self):
        self.clean = clean_channels(self.waveform, self.scenario)


def _trial(state: _PointState, seed: np.random.SeedSequence) -> tuple[np.ndarray, bool]:
    """Estimate error (tau, omega) for one noise draw, and whether it is an outlier."""
    sc = state.scenario
    spec = sc.waveform_spec
    snap = state.clean.draw(seed)
    proc = NodeProcessor(snap, sc.n_clutter_taps, spec.dt)
    res = estimate_node(
        snap, state.grid, sc.n_clutter_taps, spec.dt,
        do_refine=state.refine, tol=state.tol, max_iter=state.max_iter, processor=proc,
    )
    err = res.point - np.array([sc.target.tau, sc.target.omega])
    g = state.grid
    dt_, dw = g.spacing
    inside = (
        g.tau_axis[0] - dt_ <= res.tau <= g.tau_axis[-1] + dt_
        and g.omega_axis[0] - dw <= res.omega <= g.omega_axis[-1] + dw
    )
    return err, not (inside and res.converged)


def _run_chunk(state: _PointState, seeds: list) -> list:
    return [_trial(state, s) for s in seeds]


def trial_seed(root_seed: int, point: int, trial: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(root_seed, spawn_key=(point, trial))


def summarize(errors: np.ndarray, outlier: np.ndarray) -> tuple[np.ndarray, np.ndarray, int, int]:
    """RMSE and bias over non-outlier trials; exact (fsum) so trial order does not matter."""
    ok = errors[~outlier]
    n_ok = int(ok.shape[0])
    if n_ok == 0:
        nan = np.full(errors.shape[1], np.nan)
        return nan, nan, 0, int(outlier.sum())
    rmse = np.array([math.sqrt(math.fsum(ok[:, j] ** 2) / n_ok) for j in range(ok.shape[1])])
    bias = np.array([math.fsum(ok[:, j]) / n_ok for j in range(ok.shape[1])])
    return rmse, bias, n_ok, int(outlier.sum())


def run_campaign(cfg: CampaignConfig, waveform: IoWaveform | None = None) -> McReport:
    """Run every sweep point; the waveform is fixed, noise is redrawn per trial."""
    spec = cfg.scenario.waveform_spec
    w = waveform if waveform is not None else generate_waveform(spec, cfg.waveform_seed)
    grid = cfg.grid.build(spec)
    points, theory = [], []
    pool = ProcessPoolExecutor(cfg.threads) if cfg.threads > 1 else None
    try:
        for ip, (value, sc) in enumerate(cfg.points()):
            t0 = time.perf_counter()
            cov = total_covariance([AnalysisNode(w, sc)], variant=cfg.z_variant, with_spectral=False)
            state = _PointState(w, sc, grid, cfg.refine, cfg.tol, cfg.max_iter)
            seeds = [trial_seed(cfg.root_seed, ip, k) for k in range(cfg.n_trials)]
            if pool is None:
                results = _run_chunk(state, seeds)
            else:
                chunks = [seeds[i :: cfg.threads] for i in range(cfg.threads)]
                parts = list(pool.map(_run_chunk, [state] * cfg.threads, chunks))
                results = [None] * cfg.n_trials
                for i, part in enumerate(parts):
                    results[i :: cfg.threads] = part
            errors = np.array([r[0] for r in results])
            outlier = np.array([r[1] for r in results])
            rmse, bias, n_ok, n_out = summarize(errors, outlier)
            points.append(
                PointResult(
                    value, rmse, bias, n_ok, n_out,
                    np.sqrt(np.diag(cov.crb)), np.sqrt(np.diag(cov.total)),
                    time.perf_counter() - t0, errors,
                )
            )
            theory.append(cov)
    finally:
        if pool is not None:
            pool.shutdown()
    return McReport(cfg.sweep_axis, points, theory)


@dataclass(frozen=True)
class ComparisonRow:
    sweep_value: float
    ratio_crb: np.ndarray
    ratio_total: np.ndarray
    sqrt_crb: np.ndarray
    sqrt_total: np.ndarray
    outside_band: np.ndarray


def compare_theory(
    report: McReport,
    covs: Sequence[CovarianceReport],
    band: tuple[float, float] = (0.8, 1.25),
) -> list[ComparisonRow]:
    """Empirical RMSE over theoretical standard deviation per parameter and point.

    ``outside_band`` flags ratios (against the total covariance) outside ``band``.
    """
    if len(covs) != len(report.points):
        raise ConfigError(f"{len(covs)} theory entries for {len(report.points)} sweep points")
    rows = []
    for p, cov in zip(report.points, covs):
        s_crb = np.sqrt(np.diag(cov.crb))
        s_tot = np.sqrt(np.diag(cov.total))
        r_tot = p.rmse / s_tot
        rows.append(
            ComparisonRow(
                p.sweep_value, p.rmse / s_crb, r_tot, s_crb, s_tot,
                (r_tot < band[0]) | (r_tot > band[1]),
            )
        )
    return rows
