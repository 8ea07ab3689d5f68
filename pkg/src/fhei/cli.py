"""Command-line entry point: ``fhei {fig4a,fig4b,single,oracle,fit} [options]``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from fhei import sim
from fhei.errors import ConfigError, FHEIError
from fhei.profile import class_samples, dump_model, fit_cost_model, load_profile

log = logging.getLogger("fhei")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fhei", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)
    for name, help_text in [
        ("fig4a", "per-mobile quality under the five fixed gain pairs"),
        ("fig4b", "Monte-Carlo sum quality versus number of mobiles"),
        ("single", "all methods on one scenario"),
        ("oracle", "FHEI against the joint grid oracle (M <= 2)"),
    ]:
        s = sub.add_parser(name, help=help_text)
        s.add_argument("--config", type=Path, help="JSON experiment config")
        s.add_argument("--seed", type=int)
        s.add_argument("--trials", type=int)
        s.add_argument("--out", type=Path, help="CSV output path")
        s.add_argument("--verbose", action="store_true", help="log progress and dump allocations into the CSV")
        s.add_argument("--jobs", type=int, default=1, help="worker processes for Monte-Carlo trials")
    f = sub.add_parser("fit", help="fit the linear cost model from a layer-spec file")
    f.add_argument("--profile", type=Path, help="layer-spec JSON (default: bundled synthetic profile)")
    f.add_argument("--out", type=Path, required=True, help="model JSON output path")
    f.add_argument("--verbose", action="store_true")
    return p


def _resolve(args) -> sim.ExperimentConfig:
    cfg = sim.load_config(args.config) if args.config else sim.ExperimentConfig()
    changes = {"mode": args.command}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.trials is not None:
        changes["trials"] = args.trials
    if args.out is not None:
        changes["output"] = str(args.out)
    if args.verbose:
        changes["verbose"] = True
    if args.command == "fig4a":
        changes["M"] = 5
    return replace(cfg, **changes).validate()


def _run(args) -> int:
    if args.command == "fit":
        from fhei.profile import bundled_profile_path

        profile = load_profile(args.profile or bundled_profile_path())
        model = fit_cost_model(class_samples(profile))
        dump_model(model, args.out)
        print(json.dumps(model.to_dict()))
        return 0

    cfg = _resolve(args)
    log.info("resolved config: %s", json.dumps(cfg.to_dict(), sort_keys=True))
    out = Path(cfg.output or f"results/{cfg.mode}.csv")
    comments = sim.resolved_comments(cfg)
    if cfg.mode == "fig4a":
        rows = sim.run_fig4a(cfg)
    elif cfg.mode == "single":
        rows = sim.run_single(cfg)
    elif cfg.mode == "oracle":
        rows = sim.run_oracle(cfg)
    else:
        rows = sim.run_fig4b(cfg, jobs=args.jobs)
    sim.emit_csv(rows, out, comments)
    summary = sim.summarize(rows)
    if cfg.mode == "fig4b":
        sim.emit_summary_csv(summary, out.with_name(out.stem + "_summary.csv"), comments)
    for s in summary:
        print(
            f"M={s.M:<3d} {s.method:<18s} mean sum quality {s.mean_sum_quality:10.4f}"
            f"  gap to fhei {s.mean_gap_to_fhei:+.3e}  feasible {s.n_feasible}/{s.n_feasible + s.n_infeasible}"
        )
    print(f"wrote {out}")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return _run(args)
    except ConfigError as exc:
        code = 2
        err = exc
    except (FHEIError, OSError, ValueError) as exc:
        code = 1
        err = exc
    print("error: " + json.dumps({"type": type(err).__name__, "message": str(err)}), file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
