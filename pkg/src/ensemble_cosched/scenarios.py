"""Seeded ensemble generation and the standard experimental partitions."""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

from .model import AnalysisSpec, Ensemble, ModelError, Partition, Platform, SimulationSpec

IDEAL, IN_TRANSIT, INCREASING, DECREASING = "ideal", "in-transit", "increasing", "decreasing"

GB = 1e9


@dataclass(frozen=True)
class GeneratorConfig:
    n_sims: int = 4
    analyses_per_sim: int = 4
    sim_seq_time: float = 80.0
    analysis_time_range: tuple[float, float] = (0.5, 1.5)
    data_volume: float = 4 * GB
    n_steps: int = 10
    seed: int = 0
    # memory footprints; analyses draw uniformly from the range
    sim_mem: float = 0.0
    analysis_mem_range: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        object.__setattr__(self, "analysis_time_range", tuple(self.analysis_time_range))
        object.__setattr__(self, "analysis_mem_range", tuple(self.analysis_mem_range))
        errors = []
        lo, hi = self.analysis_time_range
        if not 0 < lo <= hi:
            errors.append(f"analysis_time_range must satisfy 0 < lo <= hi, got {(lo, hi)}")
        mlo, mhi = self.analysis_mem_range
        if not 0 <= mlo <= mhi:
            errors.append(f"analysis_mem_range must satisfy 0 <= lo <= hi, got {(mlo, mhi)}")
        for name in ("n_sims", "analyses_per_sim", "n_steps"):
            if getattr(self, name) < 1:
                errors.append(f"{name} must be >= 1")
        if not self.sim_seq_time > 0:
            errors.append("sim_seq_time must be > 0")
        if self.data_volume < 0 or self.sim_mem < 0:
            errors.append("data_volume and sim_mem must be >= 0")
        if errors:
            raise ModelError(errors)


def generate_ensemble(cfg: GeneratorConfig) -> Ensemble:
    rng = np.random.default_rng(cfg.seed)
    lo, hi = cfg.analysis_time_range
    n = cfg.n_sims * cfg.analyses_per_sim
    times = rng.uniform(lo, hi, size=n) * cfg.sim_seq_time
    mems = rng.uniform(*cfg.analysis_mem_range, size=n)
    sims = tuple(SimulationSpec(f"S{i}", cfg.sim_seq_time, cfg.sim_mem)
                 for i in range(1, cfg.n_sims + 1))
    analyses = []
    for k in range(n):
        i, j = divmod(k, cfg.analyses_per_sim)
        analyses.append(AnalysisSpec(f"A{i + 1}.{j + 1}", float(times[k]), cfg.data_volume,
                                     f"S{i + 1}", float(mems[k])))
    return Ensemble(sims, tuple(analyses), cfg.n_steps)


@dataclass(frozen=True)
class ScenarioSpec:
    kind: str
    x: float | None = None

    def __post_init__(self):
        if self.kind in (IDEAL, IN_TRANSIT):
            if self.x is not None:
                raise ModelError([f"scenario {self.kind!r} takes no percentage"])
        elif self.kind in (INCREASING, DECREASING):
            if self.x is None or not 0 < self.x < 100:
                raise ModelError([f"scenario {self.kind!r} needs a percentage in (0, 100), "
                                  f"got {self.x!r}"])
        else:
            raise ModelError([f"unknown scenario kind {self.kind!r}"])

    @classmethod
    def parse(cls, text: str) -> ScenarioSpec:
        """Accepts "ideal", "in-transit", "increasing-25", "decreasing-50" and so on."""
        t = text.strip().lower().replace("_", "-")
        if t in (IDEAL, IN_TRANSIT, "intransit"):
            return cls(IN_TRANSIT if t == "intransit" else t)
        m = re.fullmatch(r"(increasing|decreasing)-?(\d+(?:\.\d+)?)%?", t)
        if not m:
            raise ModelError([f"unknown scenario {text!r}; expected ideal, in-transit, "
                              "increasing-<x> or decreasing-<x>"])
        return cls(m.group(1), float(m.group(2)))

    @property
    def label(self) -> str:
        if self.x is None:
            return self.kind
        return f"{self.kind}-{self.x:g}"


def largest_share(ensemble: Ensemble, x: float) -> list[AnalysisSpec]:
    """The ceil(x% of |A|) analyses with the largest sequential times."""
    k = math.ceil(round(x / 100 * len(ensemble.analyses), 9))
    return sorted(ensemble.analyses, key=lambda a: (-a.seq_time, a.id))[:k]


def make_partition(ensemble: Ensemble, scenario: ScenarioSpec) -> Partition:
    if scenario.kind == IDEAL:
        return Partition.ideal(ensemble)
    if scenario.kind == IN_TRANSIT:
        return Partition.in_transit(ensemble)
    chosen = largest_share(ensemble, scenario.x)
    chosen.sort(key=lambda a: (a.seq_time, a.id), reverse=scenario.kind == DECREASING)
    ids = tuple(a.id for a in chosen)
    return Partition(frozenset(ensemble.analysis_ids) - set(ids), (ids,) if ids else ())


STANDARD_SCENARIOS = tuple(ScenarioSpec.parse(s) for s in (
    "ideal", "increasing-25", "decreasing-25", "increasing-50", "decreasing-50",
    "increasing-75", "decreasing-75", "in-transit"))

# Reference setup: 16 nodes, 4 simulations with 4 analyses each.
REFERENCE_PLATFORM = Platform(n_nodes=16, cores_per_node=32, mem_per_node=128 * GB,
                              bandwidth_per_node=10 * GB)
REFERENCE_GENERATOR = GeneratorConfig()
REFERENCE_SEEDS = (1, 2, 3, 4, 5)
