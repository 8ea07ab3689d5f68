"""Monte-Carlo sum quality versus number of mobiles for FHEI and the two benchmarks.

    python scripts/reproduce_fig4b.py [--config configs/fig4b.json] [--jobs 4] [--plot fig4b.png]
"""

import argparse
import time
from dataclasses import replace
from pathlib import Path

from fhei import sim


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--config", type=Path, default=Path(__file__).parents[1] / "configs/fig4b.json")
    ap.add_argument("--trials", type=int)
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--out", type=Path, default=Path("results/fig4b.csv"))
    ap.add_argument("--plot", type=Path, help="write a line chart (needs matplotlib)")
    args = ap.parse_args()

    cfg = replace(sim.load_config(args.config), mode="fig4b")
    if args.trials:
        cfg = replace(cfg, trials=args.trials)
    cfg.validate()

    start = time.perf_counter()
    rows = sim.run_fig4b(cfg, jobs=args.jobs)
    summary = sim.summarize(rows)
    comments = sim.resolved_comments(cfg)
    sim.emit_csv(rows, args.out, comments)
    sim.emit_summary_csv(summary, args.out.with_name(args.out.stem + "_summary.csv"), comments)

    for s in summary:
        print(f"M={s.M:<3d} {s.method:<18s} {s.mean_sum_quality:10.4f}  gap to fhei {s.mean_gap_to_fhei:+.4e}")
    print(f"{cfg.trials} trials per M in {time.perf_counter() - start:.1f}s; wrote {args.out}")

    if args.plot:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt

        fig, ax = plt.subplots(figsize=(6, 3.5))
        for method in sim.METHODS:
            pts = [(s.M, s.mean_sum_quality) for s in summary if s.method == method]
            ax.plot(*zip(*pts), marker="o", label=method)
        ax.set_xlabel("number of mobiles")
        ax.set_ylabel("mean sum AI quality")
        ax.legend()
        fig.tight_layout()
        fig.savefig(args.plot, dpi=150)
        print(f"wrote {args.plot}")


if __name__ == "__main__":
    main()
