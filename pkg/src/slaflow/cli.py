"""Command-line entry point: run scenarios and presets, compare reports.

    slaflow run --preset rq3_pattern1 --policy power_of_two --out runs/p2
    slaflow run --config my.yaml --seeds 0 1 2 --out runs/mine
    slaflow suite --preset rq4 --out runs/rq4
    slaflow compare runs/rq4/sla_aware runs/rq4/power_of_two --out runs/cmp
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor

from slaflow import engine, metrics, presets
from slaflow.config import ScenarioConfig, dump_config, load_config, parse_config
from slaflow.errors import ConfigError
from slaflow.profiler import calibrate_sla

log = logging.getLogger("slaflow")

AGGREGATE = "aggregate.json"
TASK_METRICS = ("goodput", "mean", "p95", "p99")
# config keys allowed to differ between compared reports
POLICY_KEYS = ("name", "scheduler", "scaler", "output_dir")


def sla_table_for(config: ScenarioConfig) -> dict[str, float]:
    if config.sla is not None:
        return dict(config.sla)
    active = {t for t, p in config.workload.mix.items() if p > 0}
    templates = [t for t in config.templates() if t.task_type in active]
    cal = config.calibration
    return calibrate_sla(templates, config.model_specs(), machines=config.machine_specs(),
                         replicas_per_model=cal.replicas_per_model, invocations=cal.invocations,
                         rate=cal.rate, seed=cal.seed, sampling_interval=config.sampling_interval)


def run_dir(out_dir: str, rate: float, seed: int) -> str:
    return os.path.join(out_dir, f"rate_{rate!r}", f"seed_{seed}")


def _run_one(args):
    config, rate, seed, sla, out_dir, formats = args
    result = engine.run(config.scenario(rate, seed, sla))
    if out_dir is not None:
        metrics.write_report(result, run_dir(out_dir, rate, seed), formats)
    return rate, seed, metrics.summarize(result)


def aggregate(config: ScenarioConfig, sla: dict, summaries) -> dict:
    by_rate: dict[float, list[dict]] = {}
    for rate, _seed, summary in summaries:
        by_rate.setdefault(rate, []).append(summary)
    rates = {}
    for rate in config.workload.rates:
        runs = by_rate[rate]
        tasks = {}
        for task in sorted({t for s in runs for t in s["tasks"]}):
            blocks = [s["tasks"][task] for s in runs if task in s["tasks"]]
            tasks[task] = {m: math.fsum(b[m] for b in blocks) / len(blocks) for m in TASK_METRICS}
            tasks[task]["runs"] = len(blocks)
        rates[repr(rate)] = {
            "tasks": tasks,
            "mean_utilization": math.fsum(s["mean_utilization"] for s in runs) / len(runs),
            "seeds": len(runs),
        }
    return {
        "name": config.name,
        "policy": f"{config.scheduler}+{config.scaler}",
        "sla_table": dict(sorted(sla.items())),
        "config": config.echo(),
        "rates": rates,
    }


def run_scenario(config: ScenarioConfig, out_dir: str | None = None, formats=("csv", "json"),
                 workers: int = 1) -> dict:
    """One simulation per (rate, seed); writes per-run reports and ``aggregate.json``."""
    sla = sla_table_for(config)
    jobs = [(config, rate, seed, sla, out_dir, formats)
            for rate in config.workload.rates for seed in config.workload.seeds]
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            summaries = list(pool.map(_run_one, jobs))
    else:
        summaries = [_run_one(job) for job in jobs]
    agg = aggregate(config, sla, summaries)
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        with open(os.path.join(out_dir, AGGREGATE), "w") as fh:
            fh.write(metrics.dumps(agg) + "\n")
    return agg


def _shape(agg: dict) -> dict:
    cfg = {k: v for k, v in agg["config"].items() if k not in POLICY_KEYS}
    return {"config": cfg, "rates": sorted(agg["rates"]),
            "tasks": {r: sorted(b["tasks"]) for r, b in agg["rates"].items()}}


def compare(aggregates: list[dict], labels: list[str] | None = None) -> list[dict]:
    """Side-by-side rows per (rate, task, metric); deltas are against the first report."""
    if len(aggregates) < 2:
        raise ConfigError("compare needs at least two reports")
    base_shape = _shape(aggregates[0])
    for agg in aggregates[1:]:
        if _shape(agg) != base_shape:
            raise ConfigError(f"report {agg['name']!r} ({agg['policy']}) is not comparable "
                              f"with {aggregates[0]['name']!r} ({aggregates[0]['policy']})")
    if labels is None:
        labels = []
        for agg in aggregates:
            label, n = agg["policy"], 2
            while label in labels:
                label, n = f"{agg['policy']}#{n}", n + 1
            labels.append(label)

    rows = []

    def add(rate, task, metric, values):
        row = {"rate": float(rate), "task": task, "metric": metric}
        row.update(zip(labels, values))
        row.update((f"delta_{lab}", v - values[0]) for lab, v in zip(labels[1:], values[1:]))
        rows.append(row)

    for rate in aggregates[0]["rates"]:
        blocks = [agg["rates"][rate] for agg in aggregates]
        for task in blocks[0]["tasks"]:
            for metric in TASK_METRICS:
                add(rate, task, metric, [b["tasks"][task][metric] for b in blocks])
        add(rate, "cluster", "mean_utilization", [b["mean_utilization"] for b in blocks])
    return rows


def write_comparison(rows: list[dict], out_dir: str, formats=("csv", "json")) -> list[str]:
    os.makedirs(out_dir, exist_ok=True)
    written = []
    if "json" in formats:
        path = os.path.join(out_dir, "comparison.json")
        with open(path, "w") as fh:
            json.dump(rows, fh, indent=2)
        written.append(path)
    if "csv" in formats:
        path = os.path.join(out_dir, "comparison.csv")
        with open(path, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(rows[0]))
            writer.writeheader()
            writer.writerows(rows)
        written.append(path)
    return written


def load_aggregate(report_dir: str) -> dict:
    with open(os.path.join(report_dir, AGGREGATE)) as fh:
        return json.load(fh)


def _formats(value: str):
    return ("csv", "json") if value == "both" else (value,)


def _config_from_args(args) -> ScenarioConfig:
    if bool(args.config) == bool(args.preset):
        raise ConfigError("give exactly one of --config or --preset")
    if args.preset:
        config = presets.preset(args.preset, args.policy or "sla_aware")
    else:
        config = load_config(args.config)
        if args.policy:
            raise ConfigError("--policy only applies to presets; use --scheduler/--scaler")
    data = config.echo()
    if args.scheduler:
        data["scheduler"] = args.scheduler
    if args.scaler:
        data["scaler"] = args.scaler
    if args.seeds is not None:
        data["workload"]["seeds"] = args.seeds
    if args.rates is not None:
        data["workload"]["rates"] = args.rates
    if args.out:
        data["output_dir"] = args.out
    return parse_config(data)


def _print_aggregate(agg: dict):
    print(f"{agg['name']} [{agg['policy']}]")
    for rate, block in agg["rates"].items():
        parts = [f"{task}: goodput={b['goodput']:.3f} p95={b['p95']:.2f}s"
                 for task, b in block["tasks"].items()]
        print(f"  {rate} req/s  util={block['mean_utilization']:.3f}  " + "  ".join(parts))


def cmd_run(args) -> int:
    config = _config_from_args(args)
    out = config.output_dir
    if out is None:
        raise ConfigError("no output directory: pass --out or set output_dir")
    agg = run_scenario(config, out, _formats(args.format), args.workers)
    _print_aggregate(agg)
    return 0


def cmd_suite(args) -> int:
    aggs = []
    for policy in presets.policies_for(args.preset):
        config = presets.preset(args.preset, policy)
        data = config.echo()
        if args.seeds is not None:
            data["workload"]["seeds"] = args.seeds
        if args.rates is not None:
            data["workload"]["rates"] = args.rates
        config = parse_config(data)
        agg = run_scenario(config, os.path.join(args.out, policy), _formats(args.format), args.workers)
        _print_aggregate(agg)
        aggs.append(agg)
    write_comparison(compare(aggs), os.path.join(args.out, "comparison"), _formats(args.format))
    return 0


def cmd_compare(args) -> int:
    rows = compare([load_aggregate(d) for d in args.reports])
    for path in write_comparison(rows, args.out, _formats(args.format)):
        print(path)
    return 0


def cmd_presets(args) -> int:
    if args.name:
        sys.stdout.write(dump_config(presets.preset(args.name, args.policy or "sla_aware")))
        return 0
    for name in presets.PRESETS:
        print(f"{name:14s} policies: {', '.join(presets.policies_for(name))}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="slaflow", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, with_source=True):
        if with_source:
            p.add_argument("--config", help="scenario YAML/JSON file")
            p.add_argument("--scheduler", choices=["sla_aware", "power_of_two", "round_robin"])
            p.add_argument("--scaler", choices=["sla_aware", "queue_length", "fixed"])
            p.add_argument("--policy", help="preset policy pairing, e.g. sla_aware or power_of_two")
        p.add_argument("--preset", choices=sorted({**presets.PRESETS, **presets.ALIASES}),
                       required=not with_source)
        p.add_argument("--seeds", type=int, nargs="+")
        p.add_argument("--rates", type=float, nargs="+")
        p.add_argument("--out", required=not with_source)
        p.add_argument("--format", choices=["csv", "json", "both"], default="both")
        p.add_argument("--workers", type=int, default=1)

    run_p = sub.add_parser("run", help="run one scenario over its rates and seeds")
    common(run_p)
    run_p.set_defaults(func=cmd_run)

    suite_p = sub.add_parser("suite", help="run every policy pairing of a preset and compare")
    common(suite_p, with_source=False)
    suite_p.set_defaults(func=cmd_suite)

    cmp_p = sub.add_parser("compare", help="side-by-side table from report directories")
    cmp_p.add_argument("reports", nargs="+")
    cmp_p.add_argument("--out", required=True)
    cmp_p.add_argument("--format", choices=["csv", "json", "both"], default="both")
    cmp_p.set_defaults(func=cmd_compare)

    pre_p = sub.add_parser("presets", help="list presets, or dump one as YAML")
    pre_p.add_argument("name", nargs="?")
    pre_p.add_argument("--policy")
    pre_p.set_defaults(func=cmd_presets)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
