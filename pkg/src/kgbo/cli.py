"""Command line interface: run experiments, emit demo data, summarize CSVs."""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from .bench import (
    SUMMARY_COLUMNS,
    load_config,
    load_preset,
    read_results_csv,
    run_experiment,
    summarize,
    write_csv,
)
from .demo import demo_emit


def _parse_int_list(text: str) -> tuple:
    return tuple(int(tok) for tok in text.split(",") if tok.strip())


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kgbo")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a benchmark experiment")
    run.add_argument("--config", type=Path, help="YAML config file")
    run.add_argument("--preset", choices=["paper", "desk"],
                     help="built-in config preset (default: paper)")
    run.add_argument("--methods", help="comma list, e.g. disc:3,oneshot_hybrid:10,random")
    run.add_argument("--dims", help="comma list of input dimensions, e.g. 2,6")
    run.add_argument("--seeds", help="replication count, or comma list of replication ids")
    run.add_argument("--out", type=Path, help="output directory")
    run.add_argument("--jobs", type=int, help="parallel workers across cells")
    run.add_argument("--timing-mode", choices=["pinned"],
                     help="pinned: force single-worker execution for clean timings")
    run.add_argument("--budget", type=int, help="total evaluation budget per run")
    run.add_argument("--n-init", type=int, help="initial-design size (default 2(D+1))")

    demo = sub.add_parser("demo", help="emit 1D acquisition demo CSVs")
    demo.add_argument("--out", type=Path, required=True)
    demo.add_argument("--x-new", type=float, default=0.7,
                      help="candidate point illustrated by the demo")

    summ = sub.add_parser("summarize", help="aggregate an existing results.csv")
    summ.add_argument("--in", dest="input", type=Path, required=True)
    summ.add_argument("--out", type=Path, required=True)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)

    if args.command == "run":
        if args.config and args.preset:
            print("use either --config or --preset, not both", file=sys.stderr)
            return 2
        if args.config:
            cfg = load_config(args.config)
        else:
            cfg = load_preset(args.preset or "paper")
        overrides = {}
        if args.methods:
            overrides["methods"] = tuple(t.strip() for t in args.methods.split(","))
        if args.dims:
            overrides["dims"] = _parse_int_list(args.dims)
        if args.seeds:
            if "," in args.seeds:
                overrides["replication_ids"] = _parse_int_list(args.seeds)
            else:
                overrides["replications"] = int(args.seeds)
        if args.out:
            overrides["out_dir"] = str(args.out)
        if args.jobs:
            overrides["jobs"] = args.jobs
        if args.timing_mode == "pinned":
            overrides["timing_pinned"] = True
        if args.budget:
            overrides["budget"] = args.budget
        if args.n_init is not None:
            overrides["n_init"] = args.n_init
        cfg = replace(cfg, **overrides)
        _, summary_rows, failures = run_experiment(cfg)
        for row in summary_rows:
            print(f"{row['method']}:{row['size_param']} dim={row['dim']} "
                  f"mean_final_oc={row['mean_final_oc']:.6g} "
                  f"median_acq_s={row['median_acq_wall_time_s']}")
        if failures:
            print(f"{len(failures)} cell(s) failed; see meta.json", file=sys.stderr)
            return 1
        return 0

    if args.command == "demo":
        paths = demo_emit(args.out, x_new=args.x_new)
        for name, path in paths.items():
            print(f"{name}: {path}")
        return 0

    if args.command == "summarize":
        rows = read_results_csv(args.input)
        summary_rows = summarize(rows)
        write_csv(args.out, SUMMARY_COLUMNS, summary_rows)
        print(f"wrote {args.out} ({len(summary_rows)} groups)")
        return 0

    return 2


if __name__ == "__main__":
    raise SystemExit(main())
