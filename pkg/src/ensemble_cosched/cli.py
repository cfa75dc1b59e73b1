"""Command line entry point: solve, simulate, sweep and calibrate."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

from .config import ConfigError, ExperimentConfig, parse_bytes, parse_config, parse_policy
from .cosched import co_sched
from .experiment import (
    INFEASIBLE,
    evaluate,
    export,
    export_calibration,
    export_summary,
    run_calibration,
    run_experiment,
    summarize,
)
from .model import InfeasibleError, ModelError, allocation_groups
from .perf import CALIBRATIONS, iteration_times
from .scenarios import ScenarioSpec, generate_ensemble, make_partition
from .sim import write_trace

log = logging.getLogger("ensemble_cosched")

EXIT_OK, EXIT_INFEASIBLE, EXIT_CONFIG = 0, 1, 2


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="YAML experiment file")
    common.add_argument("--out", help="output path (default depends on the command)")
    common.add_argument("--format", choices=("csv", "jsonl"), default="csv")
    common.add_argument("--seed-override", type=int, metavar="SEED",
                        help="use SEED, SEED+1, ... instead of the configured seeds")
    common.add_argument("--calibration", choices=CALIBRATIONS)
    common.add_argument("--policy", action="append", metavar="NODE:CORE",
                        help="allocation policy such as co:co or ev:co; repeatable")
    common.add_argument("-v", "--verbose", action="store_true")

    one = argparse.ArgumentParser(add_help=False)
    one.add_argument("--scenario", help="scenario name (default: first configured)")
    one.add_argument("--value", help="sweep value (default: first configured)")
    one.add_argument("--cosched", action="store_true",
                     help="derive the partition from the memory-aware greedy search")

    p = argparse.ArgumentParser(prog="ensemble-cosched", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("solve", parents=[common, one], help="allocation for one instance")
    sub.add_parser("simulate", parents=[common, one], help="execution trace for one instance")
    sw = sub.add_parser("sweep", parents=[common], help="full experiment")
    sw.add_argument("--jobs", type=int, default=1, help="worker processes")
    sw.add_argument("--no-figures", action="store_true", help="skip the PNG figures")
    cal = sub.add_parser("calibrate", parents=[common], help="compare bandwidth variants")
    cal.add_argument("--no-figures", action="store_true")
    return p


def _load(args) -> ExperimentConfig:
    cfg = parse_config(args.config)
    return cfg.with_overrides(args.seed_override, args.calibration, args.policy)


def _instance(cfg: ExperimentConfig, args):
    if args.value is None:
        value = cfg.points[0]
    else:
        try:
            value = float(args.value)
        except ValueError:
            try:
                value = parse_bytes(args.value)
            except ValueError as e:
                raise ConfigError([f"--value: {e}"]) from None
    try:
        scenario = ScenarioSpec.parse(args.scenario) if args.scenario else cfg.scenarios[0]
    except ModelError as e:
        raise ConfigError([f"--scenario: {m}" for m in e.errors]) from None
    platform, gen = cfg.instance(value, cfg.seeds[0])
    ensemble = generate_ensemble(gen)
    if args.cosched:
        partition = co_sched(ensemble, platform).partition
    else:
        partition = make_partition(ensemble, scenario)
    return platform, ensemble, partition


def _open_out(path: str | None):
    return open(path, "w", newline="") if path else sys.stdout


def _solve(cfg: ExperimentConfig, args) -> int:
    platform, ensemble, partition = _instance(cfg, args)
    ev = evaluate(ensemble, partition, platform, cfg.policies[0], cfg.simulator)
    times = iteration_times(ensemble, partition, ev.allocation, platform.bandwidth_per_node)
    records = []
    for g in allocation_groups(ensemble, partition):
        for m in g.members:
            records.append({
                "app": m, "allocation": g.name, "co_located": m not in partition.remote,
                "nodes_rational": ev.rational[m].nodes, "cores_rational": ev.rational[m].cores,
                "nodes": int(ev.allocation[m].nodes), "cores": int(ev.allocation[m].cores),
                "iteration_time": times[m]})
    fh = _open_out(args.out)
    try:
        if args.format == "csv":
            w = csv.DictWriter(fh, fieldnames=list(records[0]), lineterminator="\n")
            w.writeheader()
            w.writerows({k: repr(v) if isinstance(v, float) else v for k, v in r.items()}
                        for r in records)
        else:
            for r in records:
                fh.write(json.dumps(r) + "\n")
    finally:
        if fh is not sys.stdout:
            fh.close()
    print(f"equalized iteration time = {ev.solution.equalized_time:.6g} s, "
          f"modeled makespan = {ev.modeled:.6g} s, "
          f"simulated = {ev.report.makespan:.6g} s", file=sys.stderr)
    return EXIT_OK


def _simulate(cfg: ExperimentConfig, args) -> int:
    platform, ensemble, partition = _instance(cfg, args)
    ev = evaluate(ensemble, partition, platform, cfg.policies[0], cfg.simulator)
    fh = _open_out(args.out)
    try:
        write_trace(ev.report, fh)
    finally:
        if fh is not sys.stdout:
            fh.close()
    print(f"simulated makespan = {ev.report.makespan:.6g} s "
          f"(modeled {ev.modeled:.6g} s)", file=sys.stderr)
    return EXIT_OK


def _sweep(cfg: ExperimentConfig, args) -> int:
    out = Path(args.out or f"results.{args.format}")
    rows = run_experiment(cfg, jobs=args.jobs)
    export(rows, args.format, out)
    summary = summarize(rows)
    summary_path = out.with_name(f"{out.stem}_summary.csv")
    written = [out]
    if summary:
        written.append(export_summary(summary, summary_path))
        if not args.no_figures:
            from .report import plot_sweep
            written += plot_sweep(summary, out)
    for p in written:
        log.info("wrote %s", p)
    bad = [r for r in rows if r.status != "ok"]
    for r in bad:
        print(f"{r.status}: {r.scenario} value={r.value} policy={r.policy} seed={r.seed}: "
              f"{r.error}", file=sys.stderr)
    return EXIT_INFEASIBLE if any(r.status == INFEASIBLE for r in rows) else EXIT_OK


def _calibrate(cfg: ExperimentConfig, args) -> int:
    out = Path(args.out or "calibration.csv")
    rows = run_calibration(cfg)
    export_calibration(rows, out)
    if not args.no_figures:
        from .report import plot_calibration
        plot_calibration(rows, out)
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        if args.policy:
            for p in args.policy:
                parse_policy(p)
        cfg = _load(args)
        handler = {"solve": _solve, "simulate": _simulate, "sweep": _sweep,
                   "calibrate": _calibrate}[args.command]
        return handler(cfg, args)
    except ConfigError as e:
        for m in e.errors:
            print(f"config error: {m}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except InfeasibleError as e:
        print(f"infeasible: {e}", file=sys.stderr)
        return EXIT_INFEASIBLE


if __name__ == "__main__":
    sys.exit(main())
