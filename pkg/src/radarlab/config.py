"""JSON run configuration and the named presets.

A config has the sections ``waveform``, ``scenario`` or ``geometry``, ``noise``,
``grid`` and ``campaign``.  Structure is checked against the shipped JSON
schema; cross-field rules are checked here.  SNRs given in dB are turned into
noise variances as |d|^2/sigma_e^2 (SC) and |a|^2/sigma_n^2 (RC), using the
first node's amplitudes.
"""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from .errors import ConfigError, RadarLabError
from .mc_harness import CampaignConfig, GridSpec
from .scene import (
    DEFAULT_CARRIER,
    DelayDoppler,
    Gains,
    NodeGeometry,
    TargetState,
    bistatic_amplitudes,
    delay_doppler,
    jacobian,
    sigma2_for_snr,
)
from .signal_core import WaveformSpec
from .synth import NodeScenario


@lru_cache(maxsize=None)
def config_schema() -> dict:
    text = resources.files("radarlab.schemas").joinpath("config.schema.json").read_text()
    return json.loads(text)


@dataclass(frozen=True)
class RunNode:
    scenario: NodeScenario
    geometry: NodeGeometry | None = None
    jacobian: np.ndarray | None = None


@dataclass(frozen=True)
class RunConfig:
    """Parsed configuration; ``raw`` keeps the validated JSON for hashing."""

    waveform_spec: WaveformSpec
    waveform_seed: int
    nodes: tuple[RunNode, ...]
    grid: GridSpec
    n_trials: int
    sweep_axis: str
    sweep_values: tuple[float, ...]
    root_seed: int
    refine: bool
    tol: float
    max_iter: int
    z_variant: str
    raw: dict

    @property
    def scenario(self) -> NodeScenario:
        return self.nodes[0].scenario

    def campaign(self, threads: int = 1) -> CampaignConfig:
        return CampaignConfig(
            scenario=self.scenario,
            n_trials=self.n_trials,
            sweep_axis=self.sweep_axis,
            sweep_values=self.sweep_values,
            root_seed=self.root_seed,
            waveform_seed=self.waveform_seed,
            grid=self.grid,
            refine=self.refine,
            tol=self.tol,
            max_iter=self.max_iter,
            z_variant=self.z_variant,
            threads=threads,
        )

    def with_seed(self, seed: int) -> "RunConfig":
        raw = copy.deepcopy(self.raw)
        raw.setdefault("campaign", {})["root_seed"] = int(seed)
        return parse_config(raw)


def _complex(v, default: complex | None = None) -> complex:
    if v is None:
        return default
    if isinstance(v, list):
        return complex(v[0], v[1])
    return complex(v)


def clutter_taps(L: int, power: float, decay_taps: float, seed: int) -> np.ndarray:
    """Random complex taps with an exponential decay profile and total power ``power``."""
    if L == 0:
        return np.zeros(0, dtype=complex)
    rng = np.random.default_rng(seed)
    c = (rng.standard_normal(L) + 1j * rng.standard_normal(L)) * np.exp(-np.arange(L) / decay_taps)
    return c * np.sqrt(power / np.sum(np.abs(c) ** 2))


def _clutter(section: dict, L: int, d: complex) -> np.ndarray:
    if "c" in section:
        c = np.array([_complex(v) for v in section["c"]], dtype=complex)
        if c.size != L:
            raise ConfigError(f"scenario.c has {c.size} taps but clutter_taps = {L}")
        return c
    power = abs(d) ** 2 * 10 ** (section.get("clutter_db", 20.0) / 10)
    return clutter_taps(L, power, section.get("clutter_decay_taps", 6.0), section.get("clutter_seed", 7))


def _noise(noise: dict, a: complex, d: complex) -> tuple[float, float]:
    def pick(snr_key, var_key, amp):
        if (snr_key in noise) == (var_key in noise):
            raise ConfigError(f"noise needs exactly one of {snr_key} or {var_key}")
        return sigma2_for_snr(amp, noise[snr_key]) if snr_key in noise else float(noise[var_key])

    return pick("rc_snr_db", "sigma_n2", a), pick("sc_snr_db", "sigma_e2", d)


def _target(t: dict, spec: WaveformSpec) -> DelayDoppler:
    if ("delay_samples" in t) == ("delay_s" in t):
        raise ConfigError("scenario.target needs exactly one of delay_samples or delay_s")
    if ("doppler_bins" in t) == ("omega_rad_s" in t):
        raise ConfigError("scenario.target needs exactly one of doppler_bins or omega_rad_s")
    tau = t["delay_s"] if "delay_s" in t else t["delay_samples"] * spec.dt
    omega = t["omega_rad_s"] if "omega_rad_s" in t else t["doppler_bins"] * spec.doppler_bin
    return DelayDoppler(float(tau), float(omega))


def _scenario_nodes(s: dict, noise: dict, spec: WaveformSpec) -> tuple[RunNode, ...]:
    a = _complex(s.get("a"), 1.0)
    d = _complex(s.get("d"), 1.0)
    if "b" in s and "dpi_db" in s:
        raise ConfigError("give scenario.b or scenario.dpi_db, not both")
    if "b" in s:
        b = _complex(s["b"])
    else:
        b = abs(d) * 10 ** (s.get("dpi_db", 30.0) / 20) * np.exp(1j * s.get("dpi_phase_rad", 0.7))
    L = s["clutter_taps"]
    c = _clutter(s, L, d)
    sn2, se2 = _noise(noise, a, d)
    sc = NodeScenario(a, complex(b), d, c, sn2, se2, spec, _target(s["target"], spec))
    return (RunNode(sc),)


def _geometry_nodes(g: dict, noise: dict, spec: WaveformSpec) -> tuple[RunNode, ...]:
    target = TargetState(g["target"]["position"], g["target"]["velocity"])
    gains = Gains(**g.get("gains", {}))
    carrier = g.get("carrier_hz", DEFAULT_CARRIER)
    L = g.get("clutter_taps", 0)
    geoms = [NodeGeometry(n["io"], n["rn"], carrier) for n in g["nodes"]]
    seed = g.get("phase_seed", 0)
    amps = [
        bistatic_amplitudes(geo, target, g["transmit_power_w"], g["rcs_m2"], gains, seed + k)
        for k, geo in enumerate(geoms)
    ]
    sn2, se2 = _noise(noise, amps[0][0], amps[0][2])
    nodes = []
    for k, (geo, (a, b, d)) in enumerate(zip(geoms, amps)):
        c = _clutter({**g, "clutter_seed": g.get("clutter_seed", 7) + k}, L, d)
        sc = NodeScenario(a, b, d, c, sn2, se2, spec, delay_doppler(geo, target))
        nodes.append(RunNode(sc, geo, jacobian(geo, target) if len(geoms) > 1 else None))
    return tuple(nodes)


def parse_config(raw: dict) -> RunConfig:
    """Validate a config mapping and build the run objects; raises ConfigError."""
    try:
        jsonschema.validate(raw, config_schema())
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"invalid config at {where}: {exc.message}") from None
    raw = copy.deepcopy(raw)
    wf = raw["waveform"]
    try:
        spec = WaveformSpec(
            bandwidth=wf["bandwidth_hz"],
            sample_rate=wf["sample_rate_hz"],
            n_samples=wf["n_samples"],
            max_delay_samples=wf["max_delay_samples"],
            power=wf.get("power", 1.0),
            floor_db=wf.get("floor_db", -30.0),
        )
        if "scenario" in raw:
            nodes = _scenario_nodes(raw["scenario"], raw["noise"], spec)
        else:
            nodes = _geometry_nodes(raw["geometry"], raw["noise"], spec)
        grid_raw = raw.get("grid", {})
        tau = grid_raw.get("tau_samples", [0, spec.max_delay_samples, 1])
        dop = grid_raw.get("doppler_bins", [-6, 6, 1])
        grid = GridSpec(*tau, *dop)
        grid.build(spec)
        camp = raw.get("campaign", {})
        cfg = RunConfig(
            waveform_spec=spec,
            waveform_seed=wf.get("seed", 1),
            nodes=nodes,
            grid=grid,
            n_trials=camp.get("n_trials", 100),
            sweep_axis=camp.get("sweep_axis", "none"),
            sweep_values=tuple(camp.get("sweep_values", ())),
            root_seed=camp.get("root_seed", 0),
            refine=camp.get("refine", True),
            tol=camp.get("tol", 1e-6),
            max_iter=camp.get("max_iter", 500),
            z_variant=camp.get("z_variant", "verbatim"),
            raw=raw,
        )
        cfg.campaign()
    except ConfigError:
        raise
    except RadarLabError as exc:
        # geometry problems found while building the config are config errors
        raise ConfigError(str(exc)) from exc
    return cfg


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror or exc}") from None
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON in {path}: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError(f"config {path} must hold a JSON object")
    if "config_hash" in raw and isinstance(raw.get("config"), dict):
        # a run manifest: rerun its embedded effective config
        raw = raw["config"]
    return parse_config(raw)


# Presets -------------------------------------------------------------------

def _base(n: int, m: int, L: int, trials: int) -> dict:
    return {
        "schema_version": 1,
        "waveform": {
            "bandwidth_hz": 8e6,
            "sample_rate_hz": 25e6,
            "n_samples": n,
            "max_delay_samples": m,
            "power": 1.0,
            "floor_db": -30.0,
            "seed": 1,
        },
        "scenario": {
            "clutter_taps": L,
            "target": {"delay_samples": round(0.6 * L + 0.37, 6), "doppler_bins": 3.3},
            "a": 1.0,
            "d": 1.0,
            "dpi_db": 30.0,
            "dpi_phase_rad": 0.7,
            "clutter_db": 20.0,
            "clutter_decay_taps": 6.0,
            "clutter_seed": 7,
        },
        "noise": {"sc_snr_db": 15.0, "rc_snr_db": 75.0},
        "grid": {"tau_samples": [0, m, 1], "doppler_bins": [-6, 6, 1]},
        "campaign": {
            "n_trials": trials,
            "sweep_axis": "none",
            "sweep_values": [],
            "root_seed": 2024,
            "refine": True,
            "tol": 1e-6,
            "max_iter": 500,
            "z_variant": "verbatim",
        },
    }


def _preset_fig1a() -> dict:
    p = _base(4096, 32, 16, 300)
    p["campaign"].update(sweep_axis="sc_snr_db", sweep_values=[-20, -10, -5, 0, 5, 10, 15])
    return p


def _preset_fig1b() -> dict:
    p = _base(4096, 32, 16, 300)
    p["campaign"].update(sweep_axis="rc_snr_db", sweep_values=[30, 40, 50, 60, 75])
    return p


def _preset_desk() -> dict:
    return _base(4096, 32, 16, 300)


def _preset_tiny() -> dict:
    p = _base(512, 16, 8, 20)
    p["campaign"].update(sweep_axis="sc_snr_db", sweep_values=[0, 15])
    return p


def _preset_full_scale() -> dict:
    return _base(8192, 80, 70, 2500)


PRESETS = {
    "fig1a": _preset_fig1a,
    "fig1b": _preset_fig1b,
    "desk": _preset_desk,
    "tiny": _preset_tiny,
    "full-scale": _preset_full_scale,
}

PRESET_HELP = {
    "fig1a": "SC SNR sweep -20..15 dB at RC SNR 75 dB (N=4096, L=16, 300 trials)",
    "fig1b": "RC SNR sweep 30..75 dB at SC SNR 15 dB (N=4096, L=16, 300 trials)",
    "desk": "single point, SC 15 dB / RC 75 dB (N=4096, L=16, 300 trials)",
    "tiny": "quick check: N=512, L=8, 20 trials, SC SNR {0, 15} dB",
    "full-scale": "single point at N=8192, L=70, 2500 trials (long)",
}


def preset(name: str) -> dict:
    """Raw config mapping for a named preset (a fresh copy)."""
    try:
        return PRESETS[name]()
    except KeyError:
        raise ConfigError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None
