#!/usr/bin/env python3
"""Render emitted CSV results as simple charts (requires matplotlib).

Reads the directories produced by reproduce_figures.py / the CLI and writes
one PNG next to each data file.  The data files are the deliverable; this is
just a convenience viewer.
"""

import argparse
import csv
from pathlib import Path

try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
except ImportError:  # pragma: no cover
    raise SystemExit("plot_results.py needs matplotlib (pip install hbtsim[plot])")


def read_csv(path):
    with open(path, newline="") as handle:
        rows = list(csv.DictReader(handle))
    return {key: [float(r[key]) for r in rows if r[key] != ""] for key in rows[0]}


def plot_curve(path: Path) -> None:
    data = read_csv(path)
    x = [v * 1e3 for v in data["position_m"]]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.errorbar(x, data["g2"], yerr=data["stderr"], fmt="o", ms=3, label="Monte Carlo")
    ax.plot(x, data["analytic"], "-", lw=1, label="analytic")
    ax.set_xlabel("detector 2 position [mm]")
    ax.set_ylabel("normalized g2")
    ax.set_title(path.stem)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path.with_suffix(".png"), dpi=150)
    plt.close(fig)


def plot_histogram(path: Path) -> None:
    data = read_csv(path)
    t = [v * 1e6 for v in data["channel_center_s"]]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(t, data["count"], ",", label="simulated")
    if "expected" in data:
        ax.plot(t, data["expected"], "-", lw=1, label="expected")
    ax.set_xlabel("time difference [us]")
    ax.set_ylabel("coincidence counts per channel")
    ax.set_title(path.parent.name)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path.with_suffix(".png"), dpi=150)
    plt.close(fig)


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("root", nargs="?", default="results")
    args = parser.parse_args()
    root = Path(args.root)
    if not root.exists():
        raise SystemExit(f"{root} does not exist; run reproduce_figures.py first")
    count = 0
    for path in sorted(root.rglob("*.csv")):
        if path.name.startswith(("singles_", "widths")):
            continue
        if path.name == "histogram.csv":
            plot_histogram(path)
        else:
            plot_curve(path)
        count += 1
        print(f"rendered {path.with_suffix('.png')}")
    if not count:
        print("no curve CSVs found")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
