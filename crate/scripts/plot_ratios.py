#!/usr/bin/env python3
"""Plot empirical/predicted ratios from `twistlab moment` JSON-lines output."""

import argparse
import json

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

RATIO_FIELDS = ["ratio", "ratio_leading", "ratio_refined", "ratio_u_bracket"]


def load(path):
    with open(path) as fh:
        return [json.loads(line) for line in fh if line.strip()]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("reports", nargs="+", help="JSON-lines files")
    ap.add_argument("-o", "--output", default="ratios.png")
    ap.add_argument("--fields", nargs="+", default=["ratio", "ratio_leading", "ratio_refined"], choices=RATIO_FIELDS)
    args = ap.parse_args()

    fig, ax = plt.subplots(figsize=(7, 4.5))
    for path in args.reports:
        rows = load(path)
        if not rows:
            continue
        tag = f"{rows[0]['kind']} {'x'.join(rows[0]['forms'])}"
        for field in args.fields:
            pts = [(r["X"], r[field]) for r in rows if r.get(field) is not None]
            if pts:
                xs, ys = zip(*pts)
                ax.plot(xs, ys, marker="o", label=f"{tag}: {field}")
    ax.axhline(1.0, color="grey", lw=0.8, ls="--")
    ax.set_xscale("log")
    ax.set_xlabel("X")
    ax.set_ylabel("empirical / predicted")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(args.output, dpi=120)
    print(f"wrote {args.output}")


if __name__ == "__main__":
    main()
