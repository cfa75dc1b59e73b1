"""Analytical performance model of pipelined simulation/analysis iterations."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from .model import (
    Allocation,
    AnalysisSpec,
    App,
    Ensemble,
    Partition,
    Platform,
    allocation_groups,
)

BASELINE, B1, B2, B3 = "baseline", "b1", "b2", "b3"
CALIBRATIONS = (BASELINE, B1, B2, B3)


def _check_resources(nodes: float, cores: float) -> None:
    if not nodes > 0 or not cores > 0:
        raise ValueError(f"resources must be positive, got nodes={nodes}, cores={cores}")


def iter_time_sim(sim: App, nodes: float, cores: float) -> float:
    """Time of one iteration on ``nodes`` x ``cores`` under perfect speedup."""
    _check_resources(nodes, cores)
    return sim.seq_time / (nodes * cores)


def iter_time_analysis(a: AnalysisSpec, nodes: float, cores: float, co_located: bool,
                       bandwidth: float) -> float:
    _check_resources(nodes, cores)
    if not bandwidth > 0:
        raise ValueError(f"bandwidth must be positive, got {bandwidth}")
    t = a.seq_time / (nodes * cores)
    if not co_located:
        t += a.data_volume / (bandwidth * nodes)
    return t


def total_work(apps: Iterable[App]) -> float:
    return sum(a.seq_time for a in apps)


def read_cost(apps: Iterable[tuple[AnalysisSpec, float]]) -> float:
    return sum(cores * a.data_volume for a, cores in apps)


def iteration_times(ensemble: Ensemble, partition: Partition, allocation: Allocation,
                    bandwidth: float) -> dict[str, float]:
    """Per-application iteration time; analyses in analysis-only groups pay the remote term."""
    out = {}
    for s in ensemble.simulations:
        r = allocation[s.id]
        out[s.id] = iter_time_sim(s, r.nodes, r.cores)
    for a in ensemble.analyses:
        r = allocation[a.id]
        out[a.id] = iter_time_analysis(a, r.nodes, r.cores, a.id in partition.co_scheduled, bandwidth)
    return out


def modeled_makespan(ensemble: Ensemble, partition: Partition, allocation: Allocation,
                     bandwidth: float) -> float:
    return ensemble.n_steps * max(iteration_times(ensemble, partition, allocation, bandwidth).values())


def allocation_iteration_time(members: Sequence[tuple[App, float]], nodes: float,
                              platform: Platform, bandwidth: float | None = None,
                              remote: Iterable[str] = ()) -> float:
    """Minimal equalized iteration time of one co-scheduling allocation.

    ``members`` are (application, cores) pairs; cores only matter for the
    members listed in ``remote`` (those not coupled with the allocation's
    simulation), which contribute cores * volume to the remote-processing cost.
    """
    if not nodes > 0:
        raise ValueError(f"nodes must be positive, got {nodes}")
    bw = platform.bandwidth_per_node if bandwidth is None else bandwidth
    remote = set(remote)
    q = total_work(app for app, _ in members)
    u = read_cost((app, c) for app, c in members if app.id in remote)
    return (bw * q + u) / (bw * platform.cores_per_node * nodes)


@dataclass(frozen=True)
class CalibrationModel:
    variant: str
    bandwidth: float


def calibrate_bandwidth(platform: Platform, partition: Partition, remote_nodes: float,
                        variant: str = B3) -> CalibrationModel:
    """Effective bandwidth for re-estimating the makespan under contention.

    Degenerate denominators (no remote analyses, no analysis-only nodes)
    fall back to the nominal per-node bandwidth.
    """
    variant = variant.lower()
    if variant not in CALIBRATIONS:
        raise ValueError(f"unknown calibration {variant!r}; expected one of {CALIBRATIONS}")
    bw = platform.bandwidth_per_node
    n_remote = len(partition.remote)
    if variant == B1 and n_remote > 0:
        return CalibrationModel(variant, bw / n_remote)
    if variant == B2 and remote_nodes > 0:
        return CalibrationModel(variant, bw / remote_nodes)
    if variant == B3 and remote_nodes > 0 and n_remote > 0:
        return CalibrationModel(variant, bw / (remote_nodes * n_remote))
    return CalibrationModel(variant, bw)


def analysis_only_nodes(ensemble: Ensemble, partition: Partition, allocation: Allocation) -> float:
    """Nodes held by analysis-only allocations."""
    return sum(allocation.group_nodes(g) for g in allocation_groups(ensemble, partition)
               if g.analysis_only)
