"""Rational Co-Alloc: makespan-minimizing node/core shares for a fixed partition.

Analysis-only allocations are sized first (their remote-processing cost
comes from a monotone root solve), then the remaining nodes are split among
the simulation-based allocations proportionally to their sequential work.
Every application ends up with the same iteration time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

from .model import (
    RATIONAL,
    Allocation,
    AnalysisSpec,
    AppResources,
    CoAllocationGroup,
    Ensemble,
    InfeasibleError,
    Partition,
    Platform,
    allocation_groups,
    mapping_of,
)
from .perf import total_work

CO, EV = "co", "ev"


class RootBracketError(ArithmeticError):
    pass


def remote_cost_residual(u: float, group: Sequence[AnalysisSpec], platform: Platform,
                         bandwidth: float | None = None) -> float:
    """Normalized core demand of ``group`` at remote cost ``u``, minus one.

    Each analysis needs bw * work / (bw * group_work + u - per_node * volume)
    of a node's cores; the residual is zero when the group fills the node.
    """
    bw = platform.bandwidth_per_node if bandwidth is None else bandwidth
    per_node = platform.cores_per_node
    d = bw * total_work(group) + u
    return bw * sum(a.seq_time / (d - per_node * a.data_volume) for a in group) - 1.0


def solve_remote_cost(group: Sequence[AnalysisSpec], platform: Platform,
                      bandwidth: float | None = None, max_iter: int = 4000) -> float:
    """Remote-processing cost at which a group's cores fill a node exactly.

    The residual decreases strictly to the right of its last pole, so
    bisection on a sign-changing bracket always converges. The cost is a
    core-weighted sum of data volumes, hence lies between per_node times the
    smallest and the largest volume, which seeds the bracket.
    """
    if not group:
        raise ValueError("cannot solve an empty analysis-only group")
    if any(not a.seq_time > 0 for a in group):
        raise ValueError("all sequential times must be positive")
    bw = platform.bandwidth_per_node if bandwidth is None else bandwidth
    per_node = platform.cores_per_node
    q = total_work(group)
    v_min = min(a.data_volume for a in group)
    v_max = max(a.data_volume for a in group)
    pole = max(per_node * a.data_volume for a in group) - bw * q
    if v_max == 0:
        return 0.0

    def g(u):
        return remote_cost_residual(u, group, platform, bw)

    scale = max(bw * q, per_node * v_max)
    if pole < per_node * v_min:
        lo = per_node * v_min
        g_lo = g(lo)
        if g_lo <= 0:
            return lo
    else:
        eps = 1e-9 * scale
        lo = pole + eps
        while (g_lo := g(lo)) <= 0:
            # root sits between the pole and pole + eps
            eps *= 1e-3
            lo = pole + eps
            if lo == pole:
                raise RootBracketError(f"no positive residual above the pole at {pole!r}")
    hi = max(per_node * v_max, lo)
    g_hi = g(hi)
    if 0 <= g_hi <= 1e-13:
        return hi
    step = scale
    while g_hi > 0:
        hi += step
        step *= 2
        if not math.isfinite(hi):
            raise RootBracketError(f"residual stays positive on [{lo!r}, inf)")
        g_hi = g(hi)
    if g_hi == 0:
        return hi
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        g_mid = g(mid)
        if g_mid == 0:
            return mid
        if g_mid > 0:
            lo, g_lo = mid, g_mid
        else:
            hi, g_hi = mid, g_mid
    return lo if abs(g_lo) <= abs(g_hi) else hi


@dataclass(frozen=True)
class AnalysisOnlyShares:
    group_nodes: dict[str, float]
    cores: dict[str, float]
    remote_cost: tuple[float, ...]
    remote_nodes: float


@dataclass(frozen=True)
class SimulationShares:
    sim_nodes: dict[str, float]
    cores: dict[str, float]


@dataclass(frozen=True)
class RationalSolution:
    allocation: Allocation
    remote_nodes: float
    remote_cost: tuple[float, ...]
    equalized_time: float
    groups: tuple[CoAllocationGroup, ...] = field(default=())

    @property
    def group_nodes(self) -> dict[str, float]:
        return {g.name: self.allocation.group_nodes(g) for g in self.groups}


def _analysis_only_groups(ensemble: Ensemble, partition: Partition) -> list[list[AnalysisSpec]]:
    return [[ensemble.analysis(a) for a in g] for g in partition.not_co_scheduled]


def alloc_analysis_only(partition: Partition, ensemble: Ensemble,
                        platform: Platform) -> AnalysisOnlyShares:
    partition.check(ensemble)
    bw, per_node, n_nodes = platform.bandwidth_per_node, platform.cores_per_node, platform.n_nodes
    groups = _analysis_only_groups(ensemble, partition)
    if not groups:
        return AnalysisOnlyShares({}, {}, (), 0.0)
    remote_cost = tuple(solve_remote_cost(g, platform) for g in groups)
    denom = bw * total_work(ensemble.apps.values()) + sum(remote_cost)
    names = [g.name for g in allocation_groups(ensemble, partition) if g.analysis_only]
    group_nodes, cores = {}, {}
    for name, g, u in zip(names, groups, remote_cost):
        d = bw * total_work(g) + u
        group_nodes[name] = d / denom * n_nodes
        for a in g:
            room = d - per_node * a.data_volume
            if not room > 0:
                raise InfeasibleError(f"{name}: data volume of {a.id} leaves no room for "
                                      f"compute (room = {room:g})")
            cores[a.id] = bw * a.seq_time / room * per_node
    return AnalysisOnlyShares(group_nodes, cores, remote_cost, sum(group_nodes.values()))


def alloc_simulation_based(partition: Partition, ensemble: Ensemble, platform: Platform,
                           remote_nodes: float) -> SimulationShares:
    n_nodes, per_node = platform.n_nodes, platform.cores_per_node
    if remote_nodes >= n_nodes:
        raise InfeasibleError(f"analysis-only allocations take {remote_nodes:g} of {n_nodes} nodes")
    q_local = total_work(ensemble.simulations) + total_work(
        ensemble.analysis(a) for a in partition.co_scheduled)
    sim_nodes, cores = {}, {}
    for s in ensemble.simulations:
        members = [s, *(ensemble.analysis(a) for a in sorted(mapping_of(partition, ensemble, s.id)))]
        q_alloc = total_work(members)
        sim_nodes[s.id] = q_alloc / q_local * (n_nodes - remote_nodes)
        for m in members:
            cores[m.id] = m.seq_time / q_alloc * per_node
    return SimulationShares(sim_nodes, cores)


def co_alloc(partition: Partition, ensemble: Ensemble, platform: Platform) -> RationalSolution:
    """Rational allocation equalizing every application's iteration time."""
    nc = alloc_analysis_only(partition, ensemble, platform)
    sb = alloc_simulation_based(partition, ensemble, platform, nc.remote_nodes)
    groups = allocation_groups(ensemble, partition)
    resources = {}
    for g in groups:
        n = nc.group_nodes[g.name] if g.analysis_only else sb.sim_nodes[g.sim]
        for m in g.members:
            c = nc.cores[m] if g.analysis_only else sb.cores[m]
            resources[m] = AppResources(n, c)
    bw, per_node, n_nodes = platform.bandwidth_per_node, platform.cores_per_node, platform.n_nodes
    work = bw * total_work(ensemble.apps.values()) + sum(nc.remote_cost)
    equalized_time = work / (n_nodes * bw * per_node)
    return RationalSolution(Allocation(resources, RATIONAL), nc.remote_nodes, nc.remote_cost,
                            equalized_time, tuple(groups))


def ev_alloc(partition: Partition, ensemble: Ensemble, platform: Platform,
             nodes: str = EV, cores: str = EV,
             solution: RationalSolution | None = None) -> Allocation:
    """Even-split baseline, optionally mixed with Co-Alloc at one level.

    ``nodes``/``cores`` pick "ev" (equal shares) or "co" (Co-Alloc shares)
    for the node level and the core level independently.
    """
    if nodes not in (CO, EV) or cores not in (CO, EV):
        raise ValueError(f"policies must be 'co' or 'ev', got nodes={nodes!r}, cores={cores!r}")
    groups = allocation_groups(ensemble, partition)
    if CO in (nodes, cores) and solution is None:
        solution = co_alloc(partition, ensemble, platform)
    n_nodes, per_node = platform.n_nodes, platform.cores_per_node
    resources = {}
    for g in groups:
        n = n_nodes / len(groups) if nodes == EV else solution.allocation.group_nodes(g)
        for m in g.members:
            c = per_node / len(g.members) if cores == EV else solution.allocation[m].cores
            resources[m] = AppResources(n, c)
    return Allocation(resources, RATIONAL)
