"""Sum-preserving integer relaxation of rational allocations.

Each rational value becomes its floor or its ceiling, and the group total is
unchanged. The values to round up are picked by priority: allocations with
more sequential work at node level, applications with a larger single-core
time at core level.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

from .model import (
    INTEGER,
    Allocation,
    App,
    AppResources,
    Ensemble,
    InfeasibleError,
    Partition,
    Platform,
    allocation_groups,
)
from .perf import total_work

_SNAP = 1e-9


@dataclass(frozen=True)
class RoundingPlan:
    targets: tuple[tuple[str, float, float], ...]  # (id, value, priority weight)
    target_sum: int

    def __post_init__(self):
        object.__setattr__(self, "targets", tuple(tuple(t) for t in self.targets))
        errors = [f"{i}: value {v} must be > 0" for i, v, _ in self.targets if not v > 0]
        total = sum(v for _, v, _ in self.targets)
        if abs(total - self.target_sum) > 1e-6 * max(1.0, abs(self.target_sum)):
            errors.append(f"values sum to {total!r}, expected {self.target_sum}")
        if errors:
            raise ValueError("; ".join(errors))


def _snap(v: float) -> float:
    r = round(v)
    return float(r) if abs(v - r) <= _SNAP * max(1.0, abs(v)) else v


def sum_preserving_round(plan: RoundingPlan) -> dict[str, int]:
    """Round every value to floor or ceil while keeping the total exact.

    Whatever the floors leave short of the total is handed out one unit at a
    time: first to values below 1 (which would otherwise drop to zero), then
    by descending weight, then by id.
    """
    total = plan.target_sum
    if total < len(plan.targets):
        raise InfeasibleError(f"{len(plan.targets)} targets cannot all get >= 1 out of {total}")
    values = {i: _snap(v) for i, v, _ in plan.targets}
    out = {i: math.floor(v) for i, v in values.items()}
    short = total - sum(out.values())
    fractional = [(i, w) for i, _, w in plan.targets if values[i] != out[i]]
    if not 0 <= short <= len(fractional):
        raise ValueError(f"cannot reach {total} by rounding up {short} of {len(fractional)} values")
    fractional.sort(key=lambda t: (out[t[0]] != 0, -t[1], t[0]))
    for i, _ in fractional[:short]:
        out[i] += 1
    zero = sorted(i for i, n in out.items() if n < 1)
    if zero:
        raise InfeasibleError(f"rounding leaves {zero} with no resources")
    return out


def round_cores(members: Sequence[App], cores: Sequence[float], per_node: int) -> list[int]:
    if len(members) > per_node:
        raise InfeasibleError(f"{len(members)} applications cannot share {per_node} cores")
    plan = RoundingPlan(tuple((m.id, c, m.seq_time) for m, c in zip(members, cores)), per_node)
    out = sum_preserving_round(plan)
    return [out[m.id] for m in members]


def node_rounding_plans(group_nodes: Mapping[str, float], ensemble: Ensemble,
                        partition: Partition, platform: Platform,
                        remote_cost: Sequence[float] = ()) -> list[RoundingPlan]:
    """Plans for the analysis-only allocations and for the simulation-based ones.

    The analysis-only allocations together get their rational node total
    rounded to the nearest integer, clamped so that every allocation keeps at
    least one node; the simulation-based allocations share what is left,
    their rational shares rescaled to that integer total.
    """
    n_nodes = platform.n_nodes
    bandwidth = platform.bandwidth_per_node
    groups = allocation_groups(ensemble, partition)
    nc = [g for g in groups if g.analysis_only]
    sb = [g for g in groups if not g.analysis_only]
    if len(groups) > n_nodes:
        raise InfeasibleError(f"{len(groups)} co-scheduling allocations for {n_nodes} nodes")
    plans = []
    remote_nodes_int = 0
    if nc:
        remote_nodes = sum(group_nodes[g.name] for g in nc)
        remote_nodes_int = min(max(math.floor(remote_nodes + 0.5), len(nc)), n_nodes - len(sb))
        remote_cost = list(remote_cost) or [0.0] * len(nc)
        targets = []
        for g, u in zip(nc, remote_cost):
            weight = bandwidth * total_work(ensemble.app(m) for m in g.members) + u
            targets.append((g.name, group_nodes[g.name] * remote_nodes_int / remote_nodes, weight))
        plans.append(RoundingPlan(tuple(targets), remote_nodes_int))
    rest = sum(group_nodes[g.name] for g in sb)
    scale = (n_nodes - remote_nodes_int) / rest
    plans.append(RoundingPlan(tuple((g.name, group_nodes[g.name] * scale,
                                     total_work(ensemble.app(m) for m in g.members)) for g in sb),
                              n_nodes - remote_nodes_int))
    return plans


def round_nodes(solution, ensemble: Ensemble, partition: Partition,
                platform: Platform) -> dict[str, int]:
    """Integer node count per co-scheduling allocation, summing to the platform size."""
    out = {}
    for plan in node_rounding_plans(solution.group_nodes, ensemble, partition, platform,
                                    solution.remote_cost):
        out.update(sum_preserving_round(plan))
    return out


@dataclass(frozen=True)
class RoundingResult:
    allocation: Allocation
    node_sources: dict[str, float]  # rational value fed to rounding, per allocation
    core_sources: dict[str, float]  # per application


def round_allocation(allocation: Allocation, ensemble: Ensemble, partition: Partition,
                     platform: Platform, remote_cost: Sequence[float] = ()) -> RoundingResult:
    """Round nodes, then cores, of any rational allocation."""
    groups = allocation_groups(ensemble, partition)
    group_nodes = {g.name: allocation.group_nodes(g) for g in groups}
    nodes, node_sources = {}, {}
    for plan in node_rounding_plans(group_nodes, ensemble, partition, platform, remote_cost):
        nodes.update(sum_preserving_round(plan))
        node_sources.update({name: v for name, v, _ in plan.targets})
    resources, core_sources = {}, {}
    per_node = platform.cores_per_node
    for g in groups:
        members = [ensemble.app(m) for m in g.members]
        rational = [allocation[m].cores for m in g.members]
        for m, c_int, c in zip(g.members, round_cores(members, rational, per_node), rational):
            resources[m] = AppResources(nodes[g.name], c_int)
            core_sources[m] = c
    return RoundingResult(Allocation(resources, INTEGER), node_sources, core_sources)
