#!/usr/bin/env python3
"""Regenerate the four benchmark curve files at their default settings.

Writes into --outdir (default ./figures):
  example1_c0.5.csv   single-user two-relay sweep, C = 0.5   (long format)
  example1_c6.csv     same at C = 6
  wyner_fixed.csv     circular model, C = 3.5 per relay      (wide format)
  wyner_dof.csv       circular model, C = 5 log10(P)

Pass --plot to also render quick-look PNGs when matplotlib is available.
"""
import argparse
import csv
import os
import sys

from cran_rates.cli import main as cran_main


def run(args):
    code = cran_main(args)
    if code != 0:
        raise SystemExit(code)


def plot_example1(path, png):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    series = {}
    with open(path) as fh:
        for row in csv.DictReader(fh):
            series.setdefault(row["scheme"], []).append(
                (float(row["P_dB"]), float(row["rate_bits"]))
            )
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for scheme, pts in sorted(series.items()):
        pts.sort()
        ax.plot([p for p, _ in pts], [r for _, r in pts], label=scheme)
    ax.set_xlabel("P (dB)")
    ax.set_ylabel("rate (bits)")
    ax.legend()
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(png, dpi=130)
    plt.close(fig)


def plot_wyner(path, png):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    with open(path) as fh:
        reader = csv.DictReader(fh)
        cols = [c for c in reader.fieldnames if c != "P_dB"]
        rows = list(reader)
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for c in cols:
        ax.plot([float(r["P_dB"]) for r in rows], [float(r[c]) for r in rows], label=c)
    ax.set_xlabel("P (dB)")
    ax.set_ylabel("per-cell rate (bits)")
    ax.legend(fontsize=8)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(png, dpi=130)
    plt.close(fig)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--outdir", default="figures")
    ap.add_argument("--plot", action="store_true")
    ap.add_argument("--quick", action="store_true", help="coarser grids for a fast pass")
    opts = ap.parse_args()
    os.makedirs(opts.outdir, exist_ok=True)

    ex_sweep = "P:-20:20:41:dB" if not opts.quick else "P:-20:20:9:dB"
    wy_sweep = "P:-10:30:81:dB" if not opts.quick else "P:-10:30:11:dB"
    dof_sweep = "P:0:60:61:dB" if not opts.quick else "P:0:60:13:dB"

    run(["example1", "--sweep", ex_sweep, "--out", os.path.join(opts.outdir, "example1.csv")])
    run(["wyner", "--sweep", wy_sweep, "--out", os.path.join(opts.outdir, "wyner_fixed.csv")])
    run(["wyner", "--dof", "--sweep", dof_sweep, "--out", os.path.join(opts.outdir, "wyner_dof.csv")])

    if opts.plot:
        try:
            plot_example1(os.path.join(opts.outdir, "example1_c0.5.csv"),
                          os.path.join(opts.outdir, "example1_c0.5.png"))
            plot_example1(os.path.join(opts.outdir, "example1_c6.csv"),
                          os.path.join(opts.outdir, "example1_c6.png"))
            plot_wyner(os.path.join(opts.outdir, "wyner_fixed.csv"),
                       os.path.join(opts.outdir, "wyner_fixed.png"))
            plot_wyner(os.path.join(opts.outdir, "wyner_dof.csv"),
                       os.path.join(opts.outdir, "wyner_dof.png"))
        except ImportError:
            print("matplotlib not available; CSVs written, plots skipped", file=sys.stderr)
    print(f"curve files written under {opts.outdir}/")


if __name__ == "__main__":
    main()
