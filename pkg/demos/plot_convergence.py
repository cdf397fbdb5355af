"""Plot median convergence with a 25-75 percentile band from benchmark CSV files.

Usage::

    orientbench wahba --out results
    python demos/plot_convergence.py results wahba
"""

import csv
import sys
from collections import defaultdict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def load(path):
    runs = defaultdict(dict)
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            runs[int(row["replicate"])][int(row["iteration"])] = float(row["error_or_cost"])
    return np.array([[r[k] for k in sorted(r)] for _, r in sorted(runs.items())])


def main(out_dir="results", scenario="wahba"):
    out = Path(out_dir)
    fig, ax = plt.subplots(figsize=(6, 4))
    for path in sorted(out.glob(f"{scenario}_*.csv")):
        values = load(path)
        lo, mid, hi = np.percentile(values, [25, 50, 75], axis=0)
        it = np.arange(values.shape[1])
        label = path.stem.removeprefix(f"{scenario}_")
        ax.plot(it, mid, label=label)
        ax.fill_between(it, lo, hi, alpha=0.2)
    ax.set_yscale("log")
    ax.set_xlabel("iteration")
    ax.set_ylabel("geodesic error" if scenario == "wahba" else "cost")
    ax.legend()
    fig.tight_layout()
    target = out / f"{scenario}_convergence.png"
    fig.savefig(target, dpi=120)
    print(f"wrote {target}")


if __name__ == "__main__":
    main(*sys.argv[1:])
