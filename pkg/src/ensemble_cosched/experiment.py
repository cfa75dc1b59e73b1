"""Experiment runner: allocate, round, model and simulate each configuration point."""

from __future__ import annotations

import csv
import hashlib
import json
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

from .coalloc import CO, RationalSolution, co_alloc, ev_alloc
from .config import ExperimentConfig, SimulatorOptions, policy_label
from .model import Allocation, Ensemble, InfeasibleError, Partition, Platform
from .perf import CALIBRATIONS, analysis_only_nodes, calibrate_bandwidth, modeled_makespan
from .rounding import RoundingResult, round_allocation
from .scenarios import ScenarioSpec, generate_ensemble, make_partition
from .sim import SimReport, simulate

OK, INFEASIBLE, ERROR = "ok", "infeasible", "error"


@dataclass(frozen=True)
class Evaluation:
    solution: RationalSolution
    rational: Allocation
    rounding: RoundingResult
    modeled: float
    calibrated: dict[str, float]
    report: SimReport

    @property
    def allocation(self) -> Allocation:
        return self.rounding.allocation


def allocate(ensemble: Ensemble, partition: Partition, platform: Platform,
             policy: tuple[str, str] = (CO, CO),
             ) -> tuple[RationalSolution, Allocation, RoundingResult]:
    """Rational allocation under ``policy`` and its checked integer rounding."""
    solution = co_alloc(partition, ensemble, platform)
    rational = (solution.allocation if policy == (CO, CO)
                else ev_alloc(partition, ensemble, platform, *policy, solution=solution))
    rounding = round_allocation(rational, ensemble, partition, platform, solution.remote_cost)
    errors = rounding.allocation.violations(ensemble, partition, platform)
    if errors:
        raise InfeasibleError("; ".join(errors))
    return solution, rational, rounding


def evaluate(ensemble: Ensemble, partition: Partition, platform: Platform,
             policy: tuple[str, str] = (CO, CO),
             simulator: SimulatorOptions = SimulatorOptions()) -> Evaluation:
    """Allocate with ``policy``, round, then model and simulate the integer allocation."""
    solution, rational, rounding = allocate(ensemble, partition, platform, policy)
    alloc = rounding.allocation
    modeled = modeled_makespan(ensemble, partition, alloc, platform.bandwidth_per_node)
    remote_nodes = analysis_only_nodes(ensemble, partition, alloc)
    calibrated = {v: modeled_makespan(ensemble, partition, alloc,
                                      calibrate_bandwidth(platform, partition, remote_nodes, v).bandwidth)
                  for v in CALIBRATIONS}
    report = simulate(ensemble, partition, alloc, platform, simulator.pipeline_depth,
                      simulator.read_mode)
    return Evaluation(solution, rational, rounding, modeled, calibrated, report)


def allocation_digest(alloc: Allocation) -> str:
    text = "\n".join(f"{k}:{r.nodes:g}:{r.cores:g}" for k, r in sorted(alloc.resources.items()))
    return hashlib.sha256(text.encode()).hexdigest()[:12]


@dataclass(frozen=True)
class ResultRow:
    scenario: str
    axis: str
    value: float | None
    policy: str
    seed: int
    status: str
    modeled: float | None = None
    calibration: str = ""
    calibrated: float | None = None
    simulated: float | None = None
    equalized_time: float | None = None
    n_co: int | None = None
    n_nc: int | None = None
    remote_nodes: int | None = None
    digest: str = ""
    normalized: float | None = None
    error: str = ""


COLUMNS = tuple(f.name for f in fields(ResultRow))


@dataclass(frozen=True)
class _Task:
    order: tuple[int, int, int, int]
    cfg: ExperimentConfig
    value: float | None
    scenario: ScenarioSpec
    policy: tuple[str, str]
    seed: int


def _run_task(task: _Task) -> tuple[tuple[int, int, int, int], ResultRow]:
    cfg = task.cfg
    base = dict(scenario=task.scenario.label, axis=cfg.sweep_axis or "", value=task.value,
                policy=policy_label(task.policy), seed=task.seed, calibration=cfg.calibration)
    try:
        platform, gen = cfg.instance(task.value, task.seed)
        ensemble = generate_ensemble(gen)
        partition = make_partition(ensemble, task.scenario)
        ev = evaluate(ensemble, partition, platform, task.policy, cfg.simulator)
    except InfeasibleError as e:
        return task.order, ResultRow(status=INFEASIBLE, error=str(e), **base)
    except (ValueError, ArithmeticError) as e:
        return task.order, ResultRow(status=ERROR, error=str(e), **base)
    return task.order, ResultRow(
        status=OK, modeled=ev.modeled, calibrated=ev.calibrated[cfg.calibration],
        simulated=ev.report.makespan, equalized_time=ev.solution.equalized_time,
        n_co=len(partition.co_scheduled), n_nc=len(partition.remote),
        remote_nodes=int(analysis_only_nodes(ensemble, partition, ev.allocation)),
        digest=allocation_digest(ev.allocation), **base)


def run_experiment(cfg: ExperimentConfig, jobs: int = 1) -> list[ResultRow]:
    """One row per (sweep value, scenario, policy, seed), in config order.

    Failures are recorded in the row's status and error fields. The output
    does not depend on ``jobs``.
    """
    tasks = [_Task((i, j, k, t), cfg, value, sc, pol, seed)
             for i, value in enumerate(cfg.points)
             for j, sc in enumerate(cfg.scenarios)
             for k, pol in enumerate(cfg.policies)
             for t, seed in enumerate(cfg.seeds)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_task, tasks, chunksize=4))
    else:
        results = [_run_task(t) for t in tasks]
    rows = [row for _, row in sorted(results, key=lambda r: r[0])]
    return normalize(rows)


def normalize(rows: list[ResultRow]) -> list[ResultRow]:
    """Simulated makespan relative to the co:co row of the same scenario, value and seed."""
    ref = {(r.scenario, r.value, r.seed): r.simulated for r in rows
           if r.policy == "co:co" and r.status == OK}
    out = []
    for r in rows:
        base = ref.get((r.scenario, r.value, r.seed))
        norm = r.simulated / base if base and r.simulated is not None else None
        out.append(replace(r, normalized=norm))
    return out


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def export(rows: list[ResultRow], fmt: str, path: str | Path) -> Path:
    """Write rows as CSV (fixed ``COLUMNS`` header) or JSON lines."""
    if not rows:
        raise ValueError("nothing to export")
    path = Path(path)
    try:
        with path.open("w", newline="") as fh:
            if fmt == "csv":
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(COLUMNS)
                for r in rows:
                    w.writerow([_cell(getattr(r, c)) for c in COLUMNS])
            elif fmt == "jsonl":
                for r in rows:
                    fh.write(json.dumps(asdict(r), sort_keys=False) + "\n")
            else:
                raise ValueError(f"unknown format {fmt!r}; expected csv or jsonl")
    except OSError as e:
        raise OSError(f"cannot write {path}: {e.strerror}") from e
    return path


@dataclass(frozen=True)
class SummaryRow:
    scenario: str
    axis: str
    value: float | None
    policy: str
    trials: int
    mean: float
    min: float
    max: float
    modeled_mean: float
    calibrated_mean: float


def summarize(rows: list[ResultRow]) -> list[SummaryRow]:
    """Mean, min and max simulated makespan across trials, in first-seen order."""
    groups: dict[tuple, list[ResultRow]] = {}
    for r in rows:
        if r.status == OK:
            groups.setdefault((r.scenario, r.axis, r.value, r.policy), []).append(r)
    out = []
    for (scenario, axis, value, policy), rs in groups.items():
        sims = [r.simulated for r in rs]
        out.append(SummaryRow(scenario, axis, value, policy, len(rs), statistics.fmean(sims),
                              min(sims), max(sims), statistics.fmean(r.modeled for r in rs),
                              statistics.fmean(r.calibrated for r in rs)))
    return out


def export_summary(summary: list[SummaryRow], path: str | Path) -> Path:
    path = Path(path)
    cols = [f.name for f in fields(SummaryRow)]
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for s in summary:
            w.writerow([_cell(getattr(s, c)) for c in cols])
    return path


@dataclass(frozen=True)
class CalibrationRow:
    scenario: str
    axis: str
    value: float | None
    seed: int
    simulated: float
    baseline: float
    b1: float
    b2: float
    b3: float


def run_calibration(cfg: ExperimentConfig) -> list[CalibrationRow]:
    """Modeled makespan under every bandwidth variant next to the simulated one (co:co)."""
    rows = []
    for value in cfg.points:
        for sc in cfg.scenarios:
            for seed in cfg.seeds:
                platform, gen = cfg.instance(value, seed)
                ensemble = generate_ensemble(gen)
                partition = make_partition(ensemble, sc)
                ev = evaluate(ensemble, partition, platform, (CO, CO), cfg.simulator)
                rows.append(CalibrationRow(sc.label, cfg.sweep_axis or "", value, seed,
                                           ev.report.makespan, *(ev.calibrated[v]
                                                                 for v in CALIBRATIONS)))
    return rows


def export_calibration(rows: list[CalibrationRow], path: str | Path) -> Path:
    path = Path(path)
    cols = [f.name for f in fields(CalibrationRow)]
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for r in rows:
            w.writerow([_cell(getattr(r, c)) for c in cols])
    return path
