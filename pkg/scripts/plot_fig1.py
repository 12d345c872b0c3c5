"""Plot RMSE against sqrt(CRB) and sqrt(CRB + excess) from montecarlo CSVs.

    python scripts/plot_fig1.py results/fig1a.csv results/fig1b.csv --out results/fig1.png

Needs matplotlib (pip install radarlab[plot]).
"""

import argparse
import csv

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def load(path):
    with open(path) as fh:
        rows = list(csv.DictReader(fh))
    return {k: [float(r[k]) for r in rows] for k in rows[0]}


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("csv", nargs="+")
    p.add_argument("--out", default="fig1.png")
    args = p.parse_args(argv)
    fig, axes = plt.subplots(2, len(args.csv), figsize=(5 * len(args.csv), 7), squeeze=False)
    for col, path in enumerate(args.csv):
        d = load(path)
        for row, (param, unit) in enumerate((("tau", "s"), ("omega", "rad/s"))):
            ax = axes[row, col]
            key = "rmse_tau_s" if param == "tau" else "rmse_omega_rad_s"
            ax.semilogy(d["sweep_db"], d[key], "o", label="Monte Carlo")
            ax.semilogy(d["sweep_db"], d[f"sqrt_crb_{param}"], "-", label="sqrt CRB")
            ax.semilogy(d["sweep_db"], d[f"sqrt_total_{param}"], "--", label="sqrt(CRB + excess)")
            ax.set_xlabel("swept SNR (dB)")
            ax.set_ylabel(f"{param} RMSE ({unit})")
            ax.set_title(path)
            ax.grid(True, which="both", alpha=0.3)
            ax.legend()
    fig.tight_layout()
    fig.savefig(args.out, dpi=120)
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
