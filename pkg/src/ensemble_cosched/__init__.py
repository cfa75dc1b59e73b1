"""Co-scheduling and resource allocation for in situ workflow ensembles."""

from .coalloc import CO, EV, RationalSolution, co_alloc, ev_alloc, solve_remote_cost
from .cosched import CoSchedResult, check_feasibility, co_sched, evict_order
from .model import (
    Allocation,
    AnalysisSpec,
    AppResources,
    Ensemble,
    InfeasibleError,
    ModelError,
    Partition,
    Platform,
    SimulationSpec,
)
from .perf import calibrate_bandwidth, iteration_times, modeled_makespan
from .rounding import round_allocation, sum_preserving_round
from .scenarios import GeneratorConfig, ScenarioSpec, generate_ensemble, make_partition
from .sim import simulate

__all__ = [
    "CO", "EV", "RationalSolution", "co_alloc", "ev_alloc", "solve_remote_cost",
    "CoSchedResult", "check_feasibility", "co_sched", "evict_order",
    "Allocation", "AnalysisSpec", "AppResources", "Ensemble", "InfeasibleError",
    "ModelError", "Partition", "Platform", "SimulationSpec",
    "calibrate_bandwidth", "iteration_times", "modeled_makespan",
    "round_allocation", "sum_preserving_round",
    "GeneratorConfig", "ScenarioSpec", "generate_ensemble", "make_partition",
    "simulate",
]
