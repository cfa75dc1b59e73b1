"""Discrete-event simulation of a co-scheduled ensemble.

Each simulation iteration publishes its current frame (an instantaneous
write into node memory) and then computes. Each analysis iteration reads the
matching frame and then computes. A simulation may not publish frame
k + depth before every coupled analysis has finished reading frame k.

Reads by co-located analyses are free. Remote reads become network flows.
Every node has one bandwidth capacity shared by all flows entering or leaving it,
and the rates are the max-min fair allocation, recomputed whenever a flow
starts or ends. A job spanning several nodes moves as one unit: a stage
ends when its slowest node is done.

By default a remote read is staged: each of the analysis's n nodes pulls an
equal shard from the producer's nodes, then the shards circulate around a
ring of the analysis's nodes so that every node holds the whole frame.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .model import (
    INTEGER,
    Allocation,
    AnalysisSpec,
    Ensemble,
    ModelError,
    Partition,
    Platform,
    allocation_groups,
)

COMPUTE, WRITE, READ = "compute", "write", "read"
REPLICATED, SHARDED, STAGED = "replicated", "sharded", "staged"
_STAGE_RANK = {WRITE: 0, READ: 1, COMPUTE: 2}
_EPS = 1e-12


@dataclass(frozen=True)
class StageEvent:
    app: str
    iteration: int
    stage: str
    start: float
    end: float


@dataclass
class Flow:
    sources: tuple[int, ...]
    destinations: tuple[int, ...]
    remaining: float
    analysis: str
    iteration: int

    @property
    def nodes(self) -> tuple[int, ...]:
        return (*self.sources, *self.destinations)


@dataclass(frozen=True)
class SimReport:
    makespan: float
    timeline: tuple[StageEvent, ...]
    mean_period: dict[str, float]
    bandwidth_trace: tuple[tuple[float, float], ...] = field(default=())  # (time, total rate)
    fetched: dict[str, float] = field(default_factory=dict)  # bytes pulled from the producer

    def events_of(self, app: str) -> list[StageEvent]:
        return [e for e in self.timeline if e.app == app]


def bandwidth_share(flows: Sequence[Flow], capacity: float) -> list[float]:
    """Max-min fair rates by water-filling over per-node capacities."""
    rates = [0.0] * len(flows)
    left: dict[int, float] = {}
    users: dict[int, set[int]] = {}
    for i, f in enumerate(flows):
        for n in set(f.nodes):
            left.setdefault(n, capacity)
            users.setdefault(n, set()).add(i)
    active = set(range(len(flows)))
    while active:
        share = {n: left[n] / len(u) for n, u in users.items() if u}
        level = min(share.values())
        tight = [n for n, s in share.items() if s <= level * (1 + 1e-12)]
        frozen = set().union(*(users[n] for n in tight))
        for i in frozen:
            rates[i] = level
            for n in set(flows[i].nodes):
                left[n] = max(left[n] - level, 0.0)
                users[n].discard(i)
        active -= frozen
    return rates


def node_layout(ensemble: Ensemble, partition: Partition,
                allocation: Allocation) -> dict[str, tuple[int, ...]]:
    """Concrete node indices per application; allocations get consecutive ranges."""
    out, offset = {}, 0
    for g in allocation_groups(ensemble, partition):
        n = int(allocation.group_nodes(g))
        nodes = tuple(range(offset, offset + n))
        for m in g.members:
            out[m] = nodes
        offset += n
    return out


def _read_flows(a: AnalysisSpec, index: int, k: int, src: tuple[int, ...],
                dst: tuple[int, ...], read_mode: str) -> list[Flow]:
    volume = a.data_volume if read_mode == REPLICATED else a.data_volume / len(dst)
    return [Flow((src[(j + index) % len(src)],), (d,), volume, a.id, k)
            for j, d in enumerate(dst)]


def _ring_flows(a: AnalysisSpec, k: int, dst: tuple[int, ...]) -> list[Flow]:
    n = len(dst)
    return [Flow((d,), (dst[(j + 1) % n],), a.data_volume * (n - 1) / n, a.id, k)
            for j, d in enumerate(dst)]


def _check_inputs(ensemble, partition, allocation, platform, pipeline_depth, read_mode):
    if allocation.kind != INTEGER:
        raise ModelError(["the simulator needs an integer allocation"])
    if pipeline_depth < 1:
        raise ModelError([f"pipeline_depth must be >= 1, got {pipeline_depth}"])
    if read_mode not in (REPLICATED, SHARDED, STAGED):
        raise ModelError([f"unknown read_mode {read_mode!r}"])
    partition.check(ensemble)
    errors = allocation.violations(ensemble, partition, platform)
    if errors:
        raise ModelError(errors)


def simulate(ensemble: Ensemble, partition: Partition, allocation: Allocation,
             platform: Platform, pipeline_depth: int = 1,
             read_mode: str = STAGED) -> SimReport:
    """Run every application for ``ensemble.n_steps`` iterations.

    ``read_mode`` sets how a remote analysis fetches a frame: "staged"
    (shard then ring all-gather), "sharded" (each node pulls its shard and
    stops there) or "replicated" (each node pulls the whole frame from the
    producer).
    """
    _check_inputs(ensemble, partition, allocation, platform, pipeline_depth, read_mode)
    n_steps = ensemble.n_steps
    bw = platform.bandwidth_per_node
    layout = node_layout(ensemble, partition, allocation)
    duration = {x.id: x.seq_time / (allocation[x.id].nodes * allocation[x.id].cores)
                for x in ensemble.apps.values()}
    sims = sorted(ensemble.simulations, key=lambda s: s.id)
    analyses = sorted(ensemble.analyses, key=lambda a: a.id)
    index = {a.id: i for i, a in enumerate(ensemble.analyses)}
    coupled = {s.id: [a.id for a in ensemble.coupling[s.id]] for s in sims}

    written = {s.id: 0 for s in sims}      # frames published
    read = {a.id: 0 for a in analyses}     # frames fully read
    it = {x: 0 for x in ensemble.apps}     # current iteration
    busy_until: dict[str, float] = {}      # apps in a compute stage
    stage_start: dict[str, float] = {}
    reading: dict[str, list[Flow]] = {}
    gathering: set[str] = set()            # analyses in the ring phase
    fetched = {a.id: 0.0 for a in analyses}
    events: list[StageEvent] = []
    trace: list[tuple[float, float]] = []
    now = 0.0

    def start_compute(x: str) -> None:
        stage_start[x] = now
        busy_until[x] = now + duration[x]

    def finish_read(a: str) -> None:
        events.append(StageEvent(a, it[a], READ, stage_start[a], now))
        read[a] += 1
        start_compute(a)

    while True:
        # fire every stage that became ready, to a fixpoint
        progress = True
        while progress:
            progress = False
            for s in sims:
                k = it[s.id]
                if k >= n_steps or s.id in busy_until:
                    continue
                if k >= pipeline_depth and any(read[a] < k - pipeline_depth + 1
                                               for a in coupled[s.id]):
                    continue
                events.append(StageEvent(s.id, k, WRITE, now, now))
                written[s.id] = k + 1
                start_compute(s.id)
                progress = True
            for a in analyses:
                k = it[a.id]
                if k >= n_steps or a.id in busy_until or a.id in reading:
                    continue
                if written[a.coupled_sim] <= k:
                    continue
                stage_start[a.id] = now
                if a.id in partition.co_scheduled or a.data_volume == 0:
                    finish_read(a.id)
                else:
                    reading[a.id] = _read_flows(a, index[a.id], k, layout[a.coupled_sim],
                                                layout[a.id], read_mode)
                    fetched[a.id] += sum(f.remaining for f in reading[a.id])
                progress = True

        flows = [f for a in sorted(reading) for f in reading[a] if f.remaining > 0]
        rates = bandwidth_share(flows, bw) if flows else []
        trace.append((now, sum(rates)))
        candidates = list(busy_until.values())
        candidates += [now + f.remaining / r for f, r in zip(flows, rates)]
        if not candidates:
            break
        nxt = min(candidates)
        dt = nxt - now
        now = nxt
        tol = _EPS * max(1.0, abs(now))

        for f, r in zip(flows, rates):
            f.remaining = 0.0 if f.remaining <= r * (dt + tol) else f.remaining - r * dt
        for x in sorted(x for x, t in busy_until.items() if t <= now + tol):
            events.append(StageEvent(x, it[x], COMPUTE, stage_start[x], now))
            del busy_until[x]
            it[x] += 1
        for a in sorted(reading):
            if any(f.remaining > 0 for f in reading[a]):
                continue
            del reading[a]
            if read_mode == STAGED and len(layout[a]) > 1 and a not in gathering:
                gathering.add(a)
                reading[a] = _ring_flows(ensemble.analysis(a), it[a], layout[a])
            else:
                gathering.discard(a)
                finish_read(a)

    incomplete = sorted(x for x, k in it.items() if k < n_steps)
    if incomplete:
        raise RuntimeError(f"simulation deadlocked with {incomplete} unfinished")
    events.sort(key=lambda e: (e.start, e.end, e.app, _STAGE_RANK[e.stage], e.iteration))
    makespan = max(e.end for e in events)
    finish = {}
    for e in events:
        finish[e.app] = max(finish.get(e.app, 0.0), e.end)
    return SimReport(makespan, tuple(events), {x: t / n_steps for x, t in sorted(finish.items())},
                     tuple(trace), fetched)


def simulated_vs_modeled(report: SimReport, modeled: float) -> float:
    if modeled == 0:
        raise ZeroDivisionError("modeled makespan is zero")
    return report.makespan / modeled


TRACE_COLUMNS = ("app", "iter", "stage", "start", "end")


def write_trace(report: SimReport, stream: io.TextIOBase) -> None:
    """CSV timeline followed by one summary record (stage "makespan")."""
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(TRACE_COLUMNS)
    for e in report.timeline:
        w.writerow((e.app, e.iteration, e.stage, repr(e.start), repr(e.end)))
    w.writerow(("*", "", "makespan", repr(0.0), repr(report.makespan)))


def read_trace(stream: Iterable[str]) -> SimReport:
    rows = list(csv.DictReader(stream))
    events, makespan = [], None
    for r in rows:
        if r["stage"] == "makespan":
            makespan = float(r["end"])
        else:
            events.append(StageEvent(r["app"], int(r["iter"]), r["stage"],
                                     float(r["start"]), float(r["end"])))
    if makespan is None:
        raise ValueError("trace has no summary record")
    return SimReport(makespan, tuple(events), {})
