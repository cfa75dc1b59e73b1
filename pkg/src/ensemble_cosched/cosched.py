"""Co-Sched: greedy search for a partition that fits per-node memory."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

from .coalloc import RationalSolution, co_alloc
from .model import (
    AnalysisSpec,
    Ensemble,
    InfeasibleError,
    Partition,
    Platform,
    allocation_groups,
    check_ensemble,
)


@dataclass(frozen=True)
class FeasibilityReport:
    feasible: bool
    evicted: tuple[str, ...] = ()
    violations: dict[str, float] = field(default_factory=dict)  # allocation -> bytes over capacity


def evict_order(candidates: Iterable[AnalysisSpec]) -> list[AnalysisSpec]:
    """Largest footprint first, then shortest sequential time, then id."""
    return sorted(candidates, key=lambda a: (-a.mem, a.seq_time, a.id))


def _check_single_apps(ensemble: Ensemble, platform: Platform) -> None:
    mem = platform.mem_per_node
    big = [f"{a.id} ({a.mem:g} B)" for a in ensemble.apps.values() if a.mem > mem]
    if big:
        raise InfeasibleError(f"applications exceed node memory {mem:g} B on their own: "
                              + ", ".join(big))


def check_feasibility(ensemble: Ensemble, partition: Partition,
                      platform: Platform) -> FeasibilityReport:
    """Memory check of every co-scheduling allocation.

    Over-full simulation allocations name the analyses to evict, in eviction
    order, just enough to fit. Over-full analysis-only groups are reported
    as violations; ``co_sched`` avoids them by packing.
    """
    _check_single_apps(ensemble, platform)
    partition.check(ensemble)
    mem = platform.mem_per_node
    evicted, violations = [], {}
    for g in allocation_groups(ensemble, partition):
        apps = [ensemble.app(m) for m in g.members]
        total = sum(a.mem for a in apps)
        if total <= mem:
            continue
        violations[g.name] = total - mem
        if g.analysis_only:
            continue
        for a in evict_order(apps[1:]):
            if total <= mem:
                break
            evicted.append(a.id)
            total -= a.mem
    return FeasibilityReport(not evicted and not violations, tuple(evicted), violations)


def pack_groups(analyses: Iterable[AnalysisSpec], mem_per_node: float) -> tuple[tuple[str, ...], ...]:
    """First-fit-decreasing on memory into analysis-only groups fitting one node."""
    bins: list[list[AnalysisSpec]] = []
    loads: list[float] = []
    for a in evict_order(analyses):
        for i, load in enumerate(loads):
            if load + a.mem <= mem_per_node:
                bins[i].append(a)
                loads[i] += a.mem
                break
        else:
            bins.append([a])
            loads.append(a.mem)
    return tuple(tuple(a.id for a in b) for b in bins)


@dataclass(frozen=True)
class CoSchedResult:
    partition: Partition
    solution: RationalSolution
    iterations: int


def co_sched(ensemble: Ensemble, platform: Platform) -> CoSchedResult:
    """Start from the ideal partition and move evicted analyses off-node until memory fits."""
    check_ensemble(ensemble, platform)
    partition = Partition.ideal(ensemble)
    iterations = 0
    while True:
        iterations += 1
        report = check_feasibility(ensemble, partition, platform)
        if not report.evicted:
            break
        remote = [ensemble.analysis(a) for a in (*partition.remote, *report.evicted)]
        partition = Partition(partition.co_scheduled - set(report.evicted),
                              pack_groups(remote, platform.mem_per_node))
    if not report.feasible:  # only reachable through a packing bug
        raise InfeasibleError(f"memory violations remain: {report.violations}")
    n_alloc = len(ensemble.simulations) + partition.n_groups
    if n_alloc > platform.n_nodes:
        raise InfeasibleError(f"{n_alloc} co-scheduling allocations need more than "
                              f"{platform.n_nodes} nodes")
    return CoSchedResult(partition, co_alloc(partition, ensemble, platform), iterations)
