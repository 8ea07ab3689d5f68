"""Per-mobile feature sizes and qualities under the five fixed gain pairs.

    python scripts/reproduce_fig4a.py [--config configs/fig4a.json] [--out results/fig4a.csv] [--plot fig4a.png]
"""

import argparse
from dataclasses import replace
from pathlib import Path

import numpy as np

from fhei import sim


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--config", type=Path)
    ap.add_argument("--out", type=Path, default=Path("results/fig4a.csv"))
    ap.add_argument("--plot", type=Path, help="write a bar chart (needs matplotlib)")
    args = ap.parse_args()

    cfg = sim.load_config(args.config) if args.config else sim.ExperimentConfig()
    cfg = replace(cfg, mode="fig4a", M=5).validate()
    rows = sim.run_fig4a(cfg)
    sim.emit_csv(rows, args.out, sim.resolved_comments(cfg))

    methods = [m for m in sim.METHOD_ORDER if any(r.method == m for r in rows)]
    quality = {m: np.array([r.quality for r in rows if r.method == m]) for m in methods}
    print("mobile  g_U    g_D    " + "  ".join(f"{m:>18s}" for m in methods))
    for i, (gu, gd) in enumerate(zip(sim.FIXED_G_U, sim.FIXED_G_D)):
        print(f"{i:<6d}  {gu:<5.2f}  {gd:<5.2f}  " + "  ".join(f"{quality[m][i]:18.4f}" for m in methods))
    print("sum" + " " * 19 + "  ".join(f"{quality[m].sum():18.4f}" for m in methods))
    print(f"wrote {args.out}")

    if args.plot:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt

        x = np.arange(5)
        width = 0.8 / len(methods)
        fig, ax = plt.subplots(figsize=(7, 3.5))
        for j, m in enumerate(methods):
            ax.bar(x + j * width, quality[m], width, label=m)
        ax.set_xticks(x + width * (len(methods) - 1) / 2, [f"g_D={g}" for g in sim.FIXED_G_D])
        ax.set_ylabel("AI quality")
        ax.legend()
        fig.tight_layout()
        fig.savefig(args.plot, dpi=150)
        print(f"wrote {args.plot}")


if __name__ == "__main__":
    main()
