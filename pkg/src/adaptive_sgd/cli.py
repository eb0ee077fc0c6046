"""Command-line entry point: ``run``, ``sweep`` and ``verify``.

Exit codes: 0 success, 1 a run or check failed, 2 invalid configuration.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import re
import sys
from concurrent.futures import ProcessPoolExecutor

from .config import PRESETS, ExperimentConfig, load_config, preset
from .errors import InvalidSpec
from .optimizer import aggregate_traces, _run_one

EXIT_OK, EXIT_FAILURE, EXIT_CONFIG = 0, 1, 2
DEFAULT_OUT = "adaptive_sgd_out"


class ConfigError(Exception):
    pass


def _common_flags(parser, suppress):
    default = argparse.SUPPRESS if suppress else None
    parser.add_argument("--jobs", type=int, default=argparse.SUPPRESS if suppress else 1,
                        help="worker processes (default 1)")
    parser.add_argument("--out", default=default, help="output directory (default $ADAPTIVE_SGD_OUT or ./%s)" % DEFAULT_OUT)
    parser.add_argument("--seed", type=int, default=default, help="base seed, overrides the configuration")
    parser.add_argument("--no-plots", action="store_true", default=argparse.SUPPRESS if suppress else False,
                        help="do not write SVG plots")


def build_parser():
    p = argparse.ArgumentParser(prog="adaptive-sgd", description="SGD with adaptive step size control.")
    _common_flags(p, suppress=False)
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run one configuration (or preset) over its seeds")
    r.add_argument("config", help=f"JSON config file or preset name ({', '.join(PRESETS)})")
    _common_flags(r, suppress=True)

    s = sub.add_parser("sweep", help="run every combination of a sweep and write index.csv")
    s.add_argument("config", help="JSON config file or preset name")
    _common_flags(s, suppress=True)

    v = sub.add_parser("verify", help="run verification suites")
    v.add_argument("--suite", default="all", choices=["all", "bounds", "rates", "lemmas", "estimators"])
    _common_flags(v, suppress=True)
    return p


def _out_dir(args):
    out = args.out or os.environ.get("ADAPTIVE_SGD_OUT") or DEFAULT_OUT
    try:
        os.makedirs(out, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"cannot create output directory {out}: {exc}") from exc
    if not os.access(out, os.W_OK):
        raise ConfigError(f"output directory {out} is not writable")
    return out


def _load(spec) -> ExperimentConfig:
    try:
        if os.path.exists(spec):
            return load_config(spec)
        if spec in PRESETS:
            return preset(spec)
    except (InvalidSpec, TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    raise ConfigError(f"{spec}: no such file or preset")


def _combo_dirname(overrides):
    if not overrides:
        return ""
    name = "_".join(f"{k}={v:g}" if isinstance(v, float) else f"{k}={v}" for k, v in overrides.items())
    return re.sub(r"[^A-Za-z0-9_.=+-]", "-", name)


def _execute(exp: ExperimentConfig, out, jobs, plots, write_index):
    """Run all combinations x seeds; write traces, aggregates, plots and optionally index.csv."""
    combos = list(exp.combinations())
    tasks = []
    for ci, (_, cfg) in enumerate(combos):
        for i in range(exp.n_seeds):
            tasks.append((ci, cfg.with_seed(cfg.seed + i)))
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_one, [t[1] for t in tasks]))
    else:
        results = [_run_one(t[1]) for t in tasks]

    index_rows = []
    failures = []
    aggs = {}
    for ci, (overrides, cfg) in enumerate(combos):
        sub = _combo_dirname(overrides)
        d = os.path.join(out, sub) if sub else out
        os.makedirs(d, exist_ok=True)
        with open(os.path.join(d, "config.json"), "w") as fh:
            json.dump(cfg.to_dict(), fh, indent=2)
        traces = []
        for (tci, tcfg), (seed, trace, err) in zip(tasks, results):
            if tci != ci:
                continue
            row = {**{k: v for k, v in overrides.items()}, "seed": seed, "directory": sub or ".",
                   "trace": "", "status": "ok", "final_D": "", "error": ""}
            if err is not None:
                failures.append((overrides, seed, err))
                row.update(status="failed", error=err)
                print(f"run failed: {overrides or ''} seed={seed}: {err}", file=sys.stderr)
            else:
                fname = f"trace_{seed}.csv"
                trace.to_csv(os.path.join(d, fname))
                traces.append(trace)
                fd = trace.summary.get("final_D")
                row.update(trace=fname, final_D="" if fd is None else "%.17g" % fd)
            index_rows.append(row)
        if traces:
            agg = aggregate_traces(traces)
            _write_aggregate(agg, os.path.join(d, "aggregate.csv"))
            aggs[sub or "run"] = agg
            if plots:
                from .plotting import plot_aggregate

                plot_aggregate(agg, d, title=f"{exp.name} {sub}".strip())
    if plots and len(aggs) > 1:
        from .plotting import plot_comparison

        plot_comparison(aggs, os.path.join(out, "comparison"), title=exp.name)
    if write_index:
        keys = list(exp.sweep)
        with open(os.path.join(out, "index.csv"), "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=keys + ["seed", "directory", "trace", "status", "final_D", "error"])
            w.writeheader()
            w.writerows(index_rows)
    return failures


def _write_aggregate(agg, path):
    names = ["k"] + [c for c in agg if c != "k"]
    with open(path, "w", newline="") as fh:
        fh.write(",".join(names) + "\n")
        for i in range(len(agg["k"])):
            fh.write(",".join(str(int(agg["k"][i])) if n == "k" else "%.17g" % agg[n][i] for n in names) + "\n")


def cmd_run(args, write_index=False):
    exp = _load(args.config)
    if args.seed is not None:
        exp = exp.with_overrides(run=exp.run.with_seed(args.seed))
    out = _out_dir(args)
    plots = exp.plots and not args.no_plots
    failures = _execute(exp, out, max(1, args.jobs), plots, write_index)
    n = len(list(exp.combinations())) * exp.n_seeds
    print(f"{n - len(failures)}/{n} runs completed; output in {out}")
    return EXIT_FAILURE if failures else EXIT_OK


def cmd_sweep(args):
    return cmd_run(args, write_index=True)


def cmd_verify(args):
    from .checks import format_result, run_suite, write_report

    out = _out_dir(args)
    results = run_suite(args.suite, jobs=max(1, args.jobs), report=lambda r: print(format_result(r), flush=True))
    path = os.path.join(out, f"verify_{args.suite}.csv")
    write_report(results, path)
    failed = [r for r in results if r.gating and not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed; report in {path}")
    for r in failed:
        print(f"FAILED: {r.criterion}: {r.name}")
    return EXIT_FAILURE if failed else EXIT_OK


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            return cmd_run(args)
        if args.command == "sweep":
            return cmd_sweep(args)
        return cmd_verify(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
