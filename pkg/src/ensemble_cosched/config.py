"""Experiment configuration: YAML schema, unit parsing and validation.

Example::

    platform:
      n_nodes: 16
      cores_per_node: 32
      mem_per_node: 128GB
      bandwidth_per_node: 10GB/s
    generator:
      n_sims: 4
      analyses_per_sim: 4
      sim_seq_time: 80          # seconds per iteration on one core
      analysis_time_range: [0.5, 1.5]
      data_volume: 4GB
      n_steps: 10
    scenarios: [ideal, increasing-25, decreasing-25, in-transit]
    policies: ["co:co", "ev:co"]
    sweep:
      axis: data_volume
      values: [1GB, 2GB, 4GB, 8GB, 16GB]
    trials: 5
    seeds: [1, 2, 3, 4, 5]
    calibration: b3
    simulator:
      pipeline_depth: 1
      read_mode: staged
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any

import yaml

from .coalloc import CO, EV
from .model import ModelError, Platform
from .perf import B3, CALIBRATIONS
from .scenarios import (
    REFERENCE_PLATFORM,
    STANDARD_SCENARIOS,
    GeneratorConfig,
    ScenarioSpec,
)
from .sim import REPLICATED, SHARDED, STAGED

SWEEP_AXES = ("data_volume", "n_nodes", "analyses_per_sim", "n_sims")
_BYTE_AXES = {"data_volume"}
_INT_AXES = {"n_nodes", "analyses_per_sim", "n_sims"}

_UNITS = {"": 1, "b": 1, "kb": 1e3, "mb": 1e6, "gb": 1e9, "tb": 1e12,
          "kib": 2 ** 10, "mib": 2 ** 20, "gib": 2 ** 30, "tib": 2 ** 40}


class ConfigError(ModelError):
    pass


def parse_bytes(value: Any) -> float:
    """Numbers pass through; strings like "4GB", "1.5 GiB" or "10GB/s" are scaled."""
    if isinstance(value, bool):
        raise ValueError(f"not a byte quantity: {value!r}")
    if isinstance(value, (int, float)):
        return float(value)
    m = re.fullmatch(r"\s*([0-9.eE+-]+)\s*([a-zA-Z]*)\s*(?:/\s*s)?\s*", str(value))
    if not m or m.group(2).lower() not in _UNITS:
        raise ValueError(f"not a byte quantity: {value!r}")
    return float(m.group(1)) * _UNITS[m.group(2).lower()]


def parse_policy(text: str) -> tuple[str, str]:
    """"co:ev" -> ("co", "ev"); also accepts "coalloc"/"evalloc" spellings."""
    aliases = {"co": CO, "coalloc": CO, "co-alloc": CO, "ev": EV, "evalloc": EV, "ev-alloc": EV}
    parts = str(text).lower().split(":")
    if len(parts) != 2 or any(p not in aliases for p in parts):
        raise ValueError(f"policy must look like 'co:co' or 'ev:co', got {text!r}")
    return aliases[parts[0]], aliases[parts[1]]


def policy_label(policy: tuple[str, str]) -> str:
    return f"{policy[0]}:{policy[1]}"


@dataclass(frozen=True)
class SimulatorOptions:
    pipeline_depth: int = 1
    read_mode: str = STAGED


@dataclass(frozen=True)
class ExperimentConfig:
    platform: Platform = REFERENCE_PLATFORM
    generator: GeneratorConfig = field(default_factory=GeneratorConfig)
    scenarios: tuple[ScenarioSpec, ...] = STANDARD_SCENARIOS
    policies: tuple[tuple[str, str], ...] = ((CO, CO),)
    sweep_axis: str | None = None
    sweep_values: tuple[float, ...] = ()
    trials: int = 5
    seeds: tuple[int, ...] = (1, 2, 3, 4, 5)
    calibration: str = B3
    simulator: SimulatorOptions = field(default_factory=SimulatorOptions)

    @property
    def points(self) -> tuple[float | None, ...]:
        return self.sweep_values if self.sweep_axis else (None,)

    def instance(self, value: float | None, seed: int) -> tuple[Platform, GeneratorConfig]:
        """Platform and generator for one sweep point and trial seed."""
        platform, gen = self.platform, replace(self.generator, seed=seed)
        if self.sweep_axis == "n_nodes":
            platform = platform.replace(n_nodes=int(value))
        elif self.sweep_axis is not None:
            gen = replace(gen, **{self.sweep_axis: int(value) if self.sweep_axis in _INT_AXES
                                  else value})
        return platform, gen

    def with_overrides(self, seed: int | None = None, calibration: str | None = None,
                       policies: list[str] | None = None) -> ExperimentConfig:
        cfg = self
        if seed is not None:
            cfg = replace(cfg, seeds=tuple(seed + i for i in range(cfg.trials)))
        if calibration is not None:
            if calibration not in CALIBRATIONS:
                raise ConfigError([f"calibration: unknown variant {calibration!r}"])
            cfg = replace(cfg, calibration=calibration)
        if policies:
            try:
                cfg = replace(cfg, policies=tuple(parse_policy(p) for p in policies))
            except ValueError as e:
                raise ConfigError([f"policy: {e}"]) from None
        return cfg


def _section(raw: dict, name: str, errors: list[str]) -> dict:
    value = raw.get(name, {}) or {}
    if not isinstance(value, dict):
        errors.append(f"{name}: expected a mapping")
        return {}
    return value


def _unknown_keys(section: dict, allowed, prefix: str, errors: list[str]) -> None:
    for key in sorted(set(section) - set(allowed)):
        errors.append(f"{prefix}{key}: unknown field")


def _build(cls, values: dict, converters: dict, prefix: str, errors: list[str]):
    names = [f.name for f in fields(cls)]
    _unknown_keys(values, names, prefix, errors)
    kwargs = {}
    for key, value in values.items():
        if key not in names:
            continue
        try:
            kwargs[key] = converters.get(key, lambda v: v)(value)
        except (TypeError, ValueError) as e:
            errors.append(f"{prefix}{key}: {e}")
    return kwargs


def config_from_dict(raw: dict) -> ExperimentConfig:
    """Validate a parsed document; every problem is reported at once."""
    if not isinstance(raw, dict):
        raise ConfigError(["top level: expected a mapping"])
    errors: list[str] = []
    top = ("platform", "generator", "scenarios", "policies", "sweep", "trials", "seeds",
           "calibration", "simulator")
    _unknown_keys(raw, top, "", errors)

    plat_kw = _build(Platform, _section(raw, "platform", errors),
                     {"n_nodes": int, "cores_per_node": int, "mem_per_node": parse_bytes,
                      "bandwidth_per_node": parse_bytes}, "platform.", errors)
    platform = REFERENCE_PLATFORM
    try:
        platform = REFERENCE_PLATFORM.replace(**plat_kw)
    except ModelError as e:
        errors += [f"platform: {m}" for m in e.errors]

    gen_kw = _build(GeneratorConfig, _section(raw, "generator", errors),
                    {"n_sims": int, "analyses_per_sim": int, "sim_seq_time": float,
                     "analysis_time_range": lambda v: tuple(float(x) for x in v),
                     "data_volume": parse_bytes, "n_steps": int, "seed": int,
                     "sim_mem": parse_bytes,
                     "analysis_mem_range": lambda v: tuple(parse_bytes(x) for x in v)},
                    "generator.", errors)
    generator = GeneratorConfig()
    try:
        generator = GeneratorConfig(**gen_kw)
    except ModelError as e:
        errors += [f"generator: {m}" for m in e.errors]

    scenarios = STANDARD_SCENARIOS
    if "scenarios" in raw:
        parsed = []
        for i, s in enumerate(raw["scenarios"] or []):
            try:
                parsed.append(ScenarioSpec.parse(str(s)))
            except ModelError as e:
                errors += [f"scenarios[{i}]: {m}" for m in e.errors]
        if not parsed and not errors:
            errors.append("scenarios: at least one scenario is required")
        scenarios = tuple(parsed)

    policies = ((CO, CO),)
    if "policies" in raw:
        parsed_p = []
        for i, p in enumerate(raw["policies"] or []):
            try:
                parsed_p.append(parse_policy(p))
            except ValueError as e:
                errors.append(f"policies[{i}]: {e}")
        if not parsed_p:
            errors.append("policies: at least one policy is required")
        policies = tuple(parsed_p)

    axis, values = None, ()
    sweep = _section(raw, "sweep", errors)
    if sweep:
        _unknown_keys(sweep, ("axis", "values"), "sweep.", errors)
        axis = sweep.get("axis")
        if axis not in SWEEP_AXES:
            errors.append(f"sweep.axis: expected one of {SWEEP_AXES}, got {axis!r}")
            axis = None
        conv = parse_bytes if axis in _BYTE_AXES else float
        parsed_v = []
        for i, v in enumerate(sweep.get("values") or []):
            try:
                x = conv(v)
            except ValueError as e:
                errors.append(f"sweep.values[{i}]: {e}")
                continue
            if not x > 0:
                errors.append(f"sweep.values[{i}]: must be > 0, got {v!r}")
            elif axis in _INT_AXES and x != int(x):
                errors.append(f"sweep.values[{i}]: {axis} needs an integer, got {v!r}")
            parsed_v.append(x)
        if axis and not parsed_v:
            errors.append("sweep.values: at least one value is required")
        values = tuple(parsed_v)

    trials = raw.get("trials", 5)
    if not isinstance(trials, int) or isinstance(trials, bool) or trials < 1:
        errors.append(f"trials: must be an integer >= 1, got {trials!r}")
        trials = 1
    seeds = raw.get("seeds")
    if seeds is None:
        seeds = tuple(range(1, trials + 1))
    else:
        try:
            seeds = tuple(int(s) for s in seeds)
        except (TypeError, ValueError):
            errors.append(f"seeds: expected a list of integers, got {seeds!r}")
            seeds = ()
        if len(seeds) < trials:
            errors.append(f"seeds: {len(seeds)} seeds for {trials} trials")
    seeds = tuple(seeds[:trials])

    calibration = str(raw.get("calibration", B3)).lower()
    if calibration not in CALIBRATIONS:
        errors.append(f"calibration: expected one of {CALIBRATIONS}, got {calibration!r}")

    sim_kw = _build(SimulatorOptions, _section(raw, "simulator", errors),
                    {"pipeline_depth": int, "read_mode": str}, "simulator.", errors)
    simulator = SimulatorOptions(**sim_kw)
    if simulator.pipeline_depth < 1:
        errors.append("simulator.pipeline_depth: must be >= 1")
    if simulator.read_mode not in (STAGED, SHARDED, REPLICATED):
        errors.append(f"simulator.read_mode: expected staged, sharded or replicated, "
                      f"got {simulator.read_mode!r}")

    if errors:
        raise ConfigError(errors)
    return ExperimentConfig(platform, generator, scenarios, policies, axis, values, trials,
                            seeds, calibration, simulator)


def parse_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as e:
        raise ConfigError([f"{path}: {e.strerror}"]) from None
    try:
        raw = yaml.safe_load(text)
    except yaml.MarkedYAMLError as e:
        mark = e.problem_mark
        where = f"line {mark.line + 1}, column {mark.column + 1}" if mark else "unknown position"
        raise ConfigError([f"{path}: YAML error at {where}: {e.problem}"]) from None
    return config_from_dict(raw if raw is not None else {})
