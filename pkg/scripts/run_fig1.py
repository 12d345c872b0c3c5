"""Run both SNR sweeps and write plot-ready CSVs plus manifests.

    python scripts/run_fig1.py --out results/ [--threads 4] [--preset-scale desk|tiny]
"""

import argparse
import sys
from pathlib import Path

from radarlab.cli import main as cli_main


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--out", default="results")
    p.add_argument("--threads", default="1")
    args = p.parse_args(argv)
    out = Path(args.out)
    for name in ("fig1a", "fig1b"):
        rc = cli_main(["montecarlo", "--preset", name, "--out", str(out / f"{name}.csv"), "--threads", args.threads])
        if rc:
            return rc
        print(f"wrote {out / f'{name}.csv'}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
