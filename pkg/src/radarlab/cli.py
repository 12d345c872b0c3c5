"""Command-line front end: ``radarlab {surface,montecarlo,analyze,presets}``.

Exit codes: 0 success, 2 configuration error, 3 runtime error.  Each result
file gets a ``<out>.manifest.json`` with the config hash, tool version, seed,
timestamps and output paths.  A manifest can be passed back as ``--config``
to rerun with the same effective configuration.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import os
import sys
import tempfile
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import AnalysisNode, total_covariance
from .config import PRESET_HELP, PRESETS, RunConfig, load_config, parse_config, preset
from .errors import ConfigError
from .estimator import NodeProcessor
from .mc_harness import run_campaign, trial_seed
from .signal_core import generate_waveform
from .synth import synthesize

SCHEMA_VERSION = 1
EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3
THREADS_ENV = "RADAR_LAB_THREADS"


def config_hash(raw: dict) -> str:
    canon = json.dumps(raw, sort_keys=True, separators=(",", ":"))
    return "sha256:" + hashlib.sha256(canon.encode()).hexdigest()


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _atomic_write(path: Path, text: str) -> None:
    """Write via a temp file in the same directory so readers never see a partial file."""
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def manifest_path(out: Path) -> Path:
    return out.with_name(out.name + ".manifest.json")


def write_manifest(out: Path, command: str, cfg: RunConfig, started: str) -> Path:
    m = {
        "schema_version": SCHEMA_VERSION,
        "tool": "radarlab",
        "tool_version": __version__,
        "command": command,
        "config_hash": config_hash(cfg.raw),
        "root_seed": cfg.root_seed,
        "started_utc": started,
        "finished_utc": _now(),
        "outputs": [str(out)],
        "config": cfg.raw,
    }
    mp = manifest_path(out)
    _atomic_write(mp, json.dumps(m, indent=2) + "\n")
    return mp


def _load(args) -> RunConfig:
    if args.config is not None and args.preset is not None:
        raise ConfigError("give --config or --preset, not both")
    if args.preset is not None:
        cfg = parse_config(preset(args.preset))
    elif args.config is not None:
        path = Path(args.config)
        cfg = load_config(path)
    else:
        raise ConfigError("one of --config or --preset is required")
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    return cfg


def _threads(args) -> int:
    value = args.threads if args.threads is not None else os.environ.get(THREADS_ENV, "1")
    try:
        n = int(value)
    except ValueError:
        raise ConfigError(f"thread count must be an integer, got {value!r}") from None
    if n < 1:
        raise ConfigError(f"thread count must be >= 1, got {n}")
    return n


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def _csv(header, rows) -> str:
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(header)
    for r in rows:
        wr.writerow([_fmt(v) for v in r])
    return buf.getvalue()


SURFACE_COLUMNS = ("tau_s", "omega_rad_s", "value", "masked")


def surface_csv(cfg: RunConfig) -> str:
    sc = cfg.scenario
    spec = cfg.waveform_spec
    w = generate_waveform(spec, cfg.waveform_seed)
    snap = synthesize(w, sc, trial_seed(cfg.root_seed, 0, 0))
    surf = NodeProcessor(snap, sc.n_clutter_taps, spec.dt).surface(cfg.grid.build(spec))
    rows = []
    for i, tau in enumerate(surf.tau_axis):
        for j, om in enumerate(surf.omega_axis):
            rows.append((tau, om, surf.values[i, j], bool(surf.masked[i, j])))
    return _csv(SURFACE_COLUMNS, rows)


def analyze_dict(cfg: RunConfig) -> dict:
    w = generate_waveform(cfg.waveform_spec, cfg.waveform_seed)
    nodes = [AnalysisNode(w, n.scenario, n.jacobian) for n in cfg.nodes]
    rep = total_covariance(nodes, variant=cfg.z_variant)
    out = {
        "schema_version": SCHEMA_VERSION,
        "parameters": ["x_m", "y_m", "vx_m_s", "vy_m_s"] if nodes[0].jacobian is not None else ["tau_s", "omega_rad_s"],
        "sigma_e2": cfg.scenario.sigma_e2,
        "sigma_n2": cfg.scenario.sigma_n2,
        "z_variant": cfg.z_variant,
    }
    out.update(rep.to_dict())
    return out


def cmd_surface(cfg: RunConfig, out: Path, threads: int) -> None:
    _atomic_write(out, surface_csv(cfg))


def cmd_montecarlo(cfg: RunConfig, out: Path, threads: int) -> None:
    report = run_campaign(cfg.campaign(threads))
    _atomic_write(out, _csv(report.CSV_COLUMNS, report.rows()))


def cmd_analyze(cfg: RunConfig, out: Path, threads: int) -> None:
    _atomic_write(out, json.dumps(analyze_dict(cfg), indent=2) + "\n")


COMMANDS = {"surface": cmd_surface, "montecarlo": cmd_montecarlo, "analyze": cmd_analyze}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="radarlab", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"radarlab {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name, helptext in (
        ("surface", "write the cancelled delay-Doppler surface as CSV"),
        ("montecarlo", "run a Monte Carlo campaign and write per-point RMSE as CSV"),
        ("analyze", "write CRB, excess and total covariance as JSON"),
    ):
        sp = sub.add_parser(name, help=helptext)
        sp.add_argument("--config", metavar="PATH")
        sp.add_argument("--preset", choices=sorted(PRESETS))
        sp.add_argument("--out", metavar="PATH", required=True)
        sp.add_argument("--seed", type=int, help="overrides campaign.root_seed")
        sp.add_argument("--threads", help=f"worker processes (fallback: ${THREADS_ENV})")
    sp = sub.add_parser("presets", help="list presets, or write one as a config file")
    sp.add_argument("name", nargs="?", choices=sorted(PRESETS))
    sp.add_argument("--out", metavar="PATH")
    return p


def _presets(args) -> int:
    if args.name is None:
        for name in sorted(PRESETS):
            print(f"{name:12s} {PRESET_HELP[name]}")
        return EXIT_OK
    text = json.dumps(preset(args.name), indent=2) + "\n"
    if args.out:
        _atomic_write(Path(args.out), text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "presets":
        return _presets(args)
    try:
        cfg = _load(args)
        threads = _threads(args)
    except ConfigError as exc:
        print(f"radarlab: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = Path(args.out)
    started = _now()
    try:
        COMMANDS[args.command](cfg, out, threads)
        write_manifest(out, args.command, cfg, started)
    except ConfigError as exc:
        print(f"radarlab: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - any failure past config is a runtime error
        print(f"radarlab: runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
