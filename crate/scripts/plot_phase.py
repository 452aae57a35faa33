#!/usr/bin/env python3
"""Plot success rates from a grid CSV produced by `hopm experiment run`.

Usage: plot_phase.py results.csv [out.png]

One curve per (n, m, r, k) group, success rate vs the gap p - q, with
certificate and solver-exactness rates drawn separately when both exist.
"""
import csv
import sys
from collections import defaultdict


def main():
    if len(sys.argv) < 2:
        sys.exit(__doc__)
    path = sys.argv[1]
    out = sys.argv[2] if len(sys.argv) > 2 else "phase.png"

    groups = defaultdict(list)  # (n,m,r,k) -> [(gap, cert_rate, exact_rate)]
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            if row["row_type"] != "aggregate":
                continue
            key = (row["n"], row["m"], row["r"], row["k"])
            gap = float(row["p"]) - float(row["q"])
            cert = float(row["cert_rate"]) if row["cert_rate"] else None
            exact = float(row["exact_rate"]) if row["exact_rate"] else None
            groups[key].append((gap, cert, exact))

    if not groups:
        sys.exit("no aggregate rows found")

    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(7, 4.5))
    for key, points in sorted(groups.items()):
        points.sort()
        gaps = [p[0] for p in points]
        label = "n=%s m=%s r=%s k=%s" % key
        if any(p[1] is not None for p in points):
            ax.plot(gaps, [p[1] for p in points], "o-", label=f"{label} certificate")
        if any(p[2] is not None for p in points):
            ax.plot(gaps, [p[2] for p in points], "s--", label=f"{label} solver exact")
    ax.set_xlabel("gap p - q")
    ax.set_ylabel("success rate")
    ax.set_ylim(-0.05, 1.05)
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(out, dpi=150)
    print(f"wrote {out}")


if __name__ == "__main__":
    main()
