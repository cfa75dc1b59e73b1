"""Domain types: platform, ensemble, partition and allocation.

Units are seconds, bytes and bytes/second throughout. Identifiers are opaque
strings; wherever an algorithm needs a deterministic order, ties are broken
lexicographically by id.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Mapping, Sequence

RATIONAL = "rational"
INTEGER = "integer"

# Label prefix for analysis-only allocations; "<NC1>", "<NC2>", ...
NC_PREFIX = "<NC"


class ModelError(ValueError):
    """Raised when a domain object violates one of its invariants.

    ``errors`` holds every violation found, not just the first one.
    """

    def __init__(self, errors: Sequence[str]):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


@dataclass(frozen=True)
class Platform:
    n_nodes: int
    cores_per_node: int
    mem_per_node: float
    bandwidth_per_node: float

    def __post_init__(self):
        bad = [name for name in ("n_nodes", "cores_per_node", "mem_per_node", "bandwidth_per_node")
               if not getattr(self, name) > 0]
        if bad:
            raise ModelError([f"platform field {name} must be > 0" for name in bad])

    def replace(self, **changes) -> Platform:
        values = {k: getattr(self, k) for k in self.__dataclass_fields__}
        values.update(changes)
        return Platform(**values)


@dataclass(frozen=True)
class SimulationSpec:
    id: str
    seq_time: float
    mem: float = 0.0


@dataclass(frozen=True)
class AnalysisSpec:
    id: str
    seq_time: float
    data_volume: float
    coupled_sim: str
    mem: float = 0.0


App = SimulationSpec | AnalysisSpec


@dataclass(frozen=True)
class Ensemble:
    simulations: tuple[SimulationSpec, ...]
    analyses: tuple[AnalysisSpec, ...]
    n_steps: int = 1

    def __post_init__(self):
        object.__setattr__(self, "simulations", tuple(self.simulations))
        object.__setattr__(self, "analyses", tuple(self.analyses))

    @cached_property
    def apps(self) -> dict[str, App]:
        out: dict[str, App] = {}
        for app in (*self.simulations, *self.analyses):
            out.setdefault(app.id, app)
        return out

    @cached_property
    def coupling(self) -> dict[str, tuple[AnalysisSpec, ...]]:
        """p(S_i): analyses coupled with each simulation, in ensemble order."""
        out: dict[str, list[AnalysisSpec]] = {s.id: [] for s in self.simulations}
        for a in self.analyses:
            if a.coupled_sim in out:
                out[a.coupled_sim].append(a)
        return {k: tuple(v) for k, v in out.items()}

    def app(self, app_id: str) -> App:
        try:
            return self.apps[app_id]
        except KeyError:
            raise KeyError(f"unknown application id {app_id!r}") from None

    def analysis(self, app_id: str) -> AnalysisSpec:
        a = self.app(app_id)
        if not isinstance(a, AnalysisSpec):
            raise KeyError(f"{app_id!r} is not an analysis")
        return a

    @property
    def analysis_ids(self) -> list[str]:
        return [a.id for a in self.analyses]

    def with_data_volume(self, volume: float) -> Ensemble:
        from dataclasses import replace
        return Ensemble(self.simulations,
                        tuple(replace(a, data_volume=volume) for a in self.analyses),
                        self.n_steps)


def validate(ensemble: Ensemble, platform: Platform | None = None) -> list[str]:
    """Return every structural violation of ``ensemble`` (empty when valid)."""
    errors = []
    seen: set[str] = set()
    for app in (*ensemble.simulations, *ensemble.analyses):
        if app.id in seen:
            errors.append(f"duplicate id {app.id!r}")
        seen.add(app.id)
        if app.id.startswith(NC_PREFIX):
            errors.append(f"id {app.id!r} uses the reserved prefix {NC_PREFIX!r}")
        if not app.seq_time > 0:
            errors.append(f"{app.id}: non-positive seq_time {app.seq_time}")
        if app.mem < 0:
            errors.append(f"{app.id}: negative memory footprint {app.mem}")
    sim_ids = {s.id for s in ensemble.simulations}
    covered = set()
    for a in ensemble.analyses:
        if a.data_volume < 0:
            errors.append(f"{a.id}: negative data_volume {a.data_volume}")
        if a.coupled_sim not in sim_ids:
            errors.append(f"{a.id}: dangling coupling to {a.coupled_sim!r}")
        covered.add(a.coupled_sim)
    for s in ensemble.simulations:
        if s.id not in covered:
            errors.append(f"{s.id}: uncovered simulation (no coupled analysis)")
    if ensemble.n_steps < 1:
        errors.append(f"n_steps must be >= 1, got {ensemble.n_steps}")
    if not ensemble.simulations:
        errors.append("ensemble has no simulation")
    if platform is not None:
        for app in (*ensemble.simulations, *ensemble.analyses):
            if app.mem > platform.mem_per_node:
                errors.append(f"{app.id}: memory footprint {app.mem:g} exceeds node memory "
                              f"{platform.mem_per_node:g}")
    return errors


def check_ensemble(ensemble: Ensemble, platform: Platform | None = None) -> Ensemble:
    errors = validate(ensemble, platform)
    if errors:
        raise ModelError(errors)
    return ensemble


@dataclass(frozen=True)
class Partition:
    """Split of the analyses into co-scheduled ones and analysis-only groups.

    Groups are ordered tuples so that scenario orderings survive for
    reporting; set semantics are available through ``remote``.
    """

    co_scheduled: frozenset[str]
    not_co_scheduled: tuple[tuple[str, ...], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "co_scheduled", frozenset(self.co_scheduled))
        groups = tuple(tuple(g) for g in self.not_co_scheduled)
        object.__setattr__(self, "not_co_scheduled", groups)
        errors = []
        seen = set(self.co_scheduled)
        for i, g in enumerate(groups, 1):
            if not g:
                errors.append(f"analysis-only group {i} is empty")
            for a in g:
                if a in seen:
                    errors.append(f"analysis {a!r} appears in more than one set")
                seen.add(a)
        if errors:
            raise ModelError(errors)

    @classmethod
    def ideal(cls, ensemble: Ensemble) -> Partition:
        return cls(frozenset(ensemble.analysis_ids), ())

    @classmethod
    def in_transit(cls, ensemble: Ensemble) -> Partition:
        return cls(frozenset(), (tuple(ensemble.analysis_ids),))

    @cached_property
    def remote(self) -> frozenset[str]:
        """Every analysis placed in an analysis-only group."""
        return frozenset(a for g in self.not_co_scheduled for a in g)

    @property
    def n_groups(self) -> int:
        return len(self.not_co_scheduled)

    def check(self, ensemble: Ensemble) -> Partition:
        everything = set(ensemble.analysis_ids)
        mine = set(self.co_scheduled) | set(self.remote)
        errors = [f"unknown analysis {a!r} in partition" for a in sorted(mine - everything)]
        errors += [f"analysis {a!r} not covered by partition" for a in sorted(everything - mine)]
        if errors:
            raise ModelError(errors)
        return self

    def move_to_remote(self, ids: Iterable[str], group: int = 0) -> Partition:
        """Move co-scheduled analyses into analysis-only group ``group``.

        ``group == len(groups)`` opens a new group.
        """
        ids = [a for a in ids]
        missing = [a for a in ids if a not in self.co_scheduled]
        if missing:
            raise ModelError([f"{a!r} is not co-scheduled" for a in missing])
        groups = [list(g) for g in self.not_co_scheduled]
        if group == len(groups):
            groups.append([])
        groups[group].extend(ids)
        return Partition(self.co_scheduled - set(ids), tuple(tuple(g) for g in groups))


def mapping_of(partition: Partition, ensemble: Ensemble, sim_id: str) -> frozenset[str]:
    """Analyses coupled with ``sim_id`` that are co-scheduled with it."""
    if sim_id not in ensemble.coupling:
        raise KeyError(f"unknown simulation {sim_id!r}")
    return frozenset(a.id for a in ensemble.coupling[sim_id] if a.id in partition.co_scheduled)


@dataclass(frozen=True)
class CoAllocationGroup:
    """One co-scheduling allocation: the applications sharing a set of nodes."""

    name: str
    members: tuple[str, ...]
    sim: str | None = None

    @property
    def analysis_only(self) -> bool:
        return self.sim is None


def allocation_groups(ensemble: Ensemble, partition: Partition) -> list[CoAllocationGroup]:
    """Simulation-based allocations in ensemble order, then the analysis-only ones."""
    groups = []
    for s in ensemble.simulations:
        coupled = [a.id for a in ensemble.coupling[s.id] if a.id in partition.co_scheduled]
        groups.append(CoAllocationGroup(s.id, (s.id, *coupled), s.id))
    for i, g in enumerate(partition.not_co_scheduled, 1):
        groups.append(CoAllocationGroup(f"{NC_PREFIX}{i}>", tuple(g), None))
    return groups


@dataclass(frozen=True)
class AppResources:
    nodes: float
    cores: float


@dataclass(frozen=True)
class Allocation:
    """Per-application (nodes, cores-per-node), rational or integer."""

    resources: Mapping[str, AppResources]
    kind: str = RATIONAL

    def __post_init__(self):
        if self.kind not in (RATIONAL, INTEGER):
            raise ValueError(f"unknown allocation kind {self.kind!r}")
        object.__setattr__(self, "resources", dict(self.resources))

    def __getitem__(self, app_id: str) -> AppResources:
        try:
            return self.resources[app_id]
        except KeyError:
            raise KeyError(f"allocation has no entry for {app_id!r}") from None

    def __contains__(self, app_id: str) -> bool:
        return app_id in self.resources

    def group_nodes(self, group: CoAllocationGroup) -> float:
        return self[group.members[0]].nodes

    def violations(self, ensemble: Ensemble, partition: Partition, platform: Platform,
                   rel_tol: float = 1e-9) -> list[str]:
        errors = []
        for app_id in ensemble.apps:
            if app_id not in self.resources:
                errors.append(f"missing allocation entry for {app_id!r}")
        if errors:
            return errors
        total_nodes = 0.0
        per_node = platform.cores_per_node
        for g in allocation_groups(ensemble, partition):
            res = [self[m] for m in g.members]
            for m, r in zip(g.members, res):
                if not r.nodes > 0 or not r.cores > 0:
                    errors.append(f"{m}: non-positive resources ({r.nodes}, {r.cores})")
                if self.kind == INTEGER and (r.nodes != int(r.nodes) or r.cores != int(r.cores)):
                    errors.append(f"{m}: non-integer resources in integer allocation")
            nodes = {r.nodes for r in res}
            if max(nodes) - min(nodes) > rel_tol * max(nodes):
                errors.append(f"{g.name}: members disagree on node count {sorted(nodes)}")
            cores = sum(r.cores for r in res)
            if cores > per_node * (1 + rel_tol):
                errors.append(f"{g.name}: {cores:g} cores per node exceed capacity {per_node}")
            total_nodes += res[0].nodes
        if total_nodes > platform.n_nodes * (1 + rel_tol):
            errors.append(f"{total_nodes:g} nodes allocated, platform has {platform.n_nodes}")
        return errors


class InfeasibleError(RuntimeError):
    """The instance cannot be scheduled (memory, node count, volumes)."""
