#!/usr/bin/env python3
"""Plot currents, powers and fault flags from a run CSV.

    python3 scripts/plot_run.py out/fault_a_010__svoc.csv [-o fig.png]
"""
import argparse
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np


def load(path):
    lines = [ln for ln in Path(path).read_text().splitlines() if not ln.startswith("#")]
    header = lines[0].split(",")
    data = np.loadtxt(lines[1:], delimiter=",", ndmin=2)
    return {name: data[:, k] for k, name in enumerate(header)}


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("csv")
    ap.add_argument("-o", "--out")
    args = ap.parse_args()
    d = load(args.csv)
    t = d["t"]
    fig, axes = plt.subplots(4, 1, sharex=True, figsize=(9, 10))
    for ph in "abc":
        axes[0].plot(t, d[f"i{ph}"], lw=0.6, label=f"i_{ph}")
        axes[1].plot(t, d[f"P{ph}"], label=f"P_{ph}")
        axes[2].plot(t, d[f"Q{ph}"], label=f"Q_{ph}")
        axes[3].plot(t, d[f"irms_{ph}"], label=f"rms i_{ph}")
    for ax, unit in zip(axes, ("A", "W", "var", "A")):
        ax.set_ylabel(unit)
        ax.legend(loc="upper right", fontsize=8)
        ax.grid(alpha=0.3)
    axes[-1].set_xlabel("t [s]")
    fig.suptitle(Path(args.csv).stem)
    fig.tight_layout()
    out = args.out or str(Path(args.csv).with_suffix(".png"))
    fig.savefig(out, dpi=120)
    print(out)


if __name__ == "__main__":
    main()
