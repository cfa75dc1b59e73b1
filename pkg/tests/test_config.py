from pathlib import Path

import pytest

from ensemble_cosched.config import (
    ConfigError,
    ExperimentConfig,
    config_from_dict,
    parse_bytes,
    parse_config,
    parse_policy,
    policy_label,
)
from ensemble_cosched.scenarios import REFERENCE_PLATFORM, STANDARD_SCENARIOS

from helpers import GB

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


@pytest.mark.parametrize("text, value", [(4, 4.0), (2.5e9, 2.5e9), ("4GB", 4 * GB),
                                         ("1.5 GiB", 1.5 * 2 ** 30), ("10GB/s", 10 * GB),
                                         ("512", 512.0), ("3 mb", 3e6)])
def test_parse_bytes(text, value):
    assert parse_bytes(text) == pytest.approx(value)


@pytest.mark.parametrize("text", ["four GB", "4 parsecs", True, "GB"])
def test_parse_bytes_rejects(text):
    with pytest.raises(ValueError):
        parse_bytes(text)


def test_policies():
    assert parse_policy("co:ev") == ("co", "ev")
    assert parse_policy("EvAlloc:CoAlloc") == ("ev", "co")
    assert policy_label(("ev", "co")) == "ev:co"
    for bad in ("co", "co:co:co", "xx:co"):
        with pytest.raises(ValueError):
            parse_policy(bad)


def test_empty_document_gives_reference_defaults():
    cfg = config_from_dict({})
    assert cfg.platform == REFERENCE_PLATFORM
    assert cfg.scenarios == STANDARD_SCENARIOS
    assert cfg.seeds == (1, 2, 3, 4, 5) and cfg.points == (None,)
    assert cfg.simulator.read_mode == "staged"


@pytest.mark.parametrize("name", ["data_sweep.yaml", "policies.yaml", "calibration.yaml"])
def test_shipped_configs_load(name):
    cfg = parse_config(CONFIGS / name)
    assert isinstance(cfg, ExperimentConfig)
    assert cfg.trials == len(cfg.seeds)


def test_sweep_points():
    cfg = parse_config(CONFIGS / "data_sweep.yaml")
    assert cfg.points == (1 * GB, 2 * GB, 4 * GB, 8 * GB, 16 * GB)
    plat, gen = cfg.instance(8 * GB, 3)
    assert gen.data_volume == 8 * GB and gen.seed == 3 and plat == cfg.platform
    nodes = config_from_dict({"sweep": {"axis": "n_nodes", "values": [8, 32]}})
    plat, _ = nodes.instance(32.0, 1)
    assert plat.n_nodes == 32
    per = config_from_dict({"sweep": {"axis": "analyses_per_sim", "values": [2]}})
    assert per.instance(2.0, 1)[1].analyses_per_sim == 2


def test_every_error_is_reported_with_its_path():
    raw = {
        "platform": {"n_nodes": 0, "bandwidth_per_node": "fast"},
        "generator": {"analysis_time_range": [2, 1], "colour": "red"},
        "scenarios": ["ideal", "sideways"],
        "policies": ["co:xx"],
        "sweep": {"axis": "weather", "values": [1]},
        "trials": 0,
        "calibration": "b7",
        "simulator": {"read_mode": "telepathy"},
        "extra": 1,
    }
    with pytest.raises(ConfigError) as e:
        config_from_dict(raw)
    text = "\n".join(e.value.errors)
    for needle in ("platform.bandwidth_per_node", "platform:", "generator.colour",
                   "generator:", "scenarios[1]", "policies[0]", "sweep.axis", "trials",
                   "calibration", "simulator.read_mode", "extra: unknown field"):
        assert needle in text, needle


def test_seed_checks():
    with pytest.raises(ConfigError, match="2 seeds for 3 trials"):
        config_from_dict({"trials": 3, "seeds": [1, 2]})
    assert config_from_dict({"trials": 2, "seeds": [9, 8, 7]}).seeds == (9, 8)
    with pytest.raises(ConfigError, match="integer"):
        config_from_dict({"sweep": {"axis": "n_sims", "values": [1.5]}})
    with pytest.raises(ConfigError, match="> 0"):
        config_from_dict({"sweep": {"axis": "data_volume", "values": ["0GB"]}})


def test_overrides():
    cfg = config_from_dict({"trials": 3})
    assert cfg.with_overrides(seed=10).seeds == (10, 11, 12)
    assert cfg.with_overrides(calibration="b1").calibration == "b1"
    assert cfg.with_overrides(policies=["ev:co", "co:co"]).policies == (("ev", "co"), ("co", "co"))
    with pytest.raises(ConfigError):
        cfg.with_overrides(calibration="nope")
    with pytest.raises(ConfigError):
        cfg.with_overrides(policies=["co"])


def test_yaml_errors_carry_a_position(tmp_path):
    bad = tmp_path / "bad.yaml"
    bad.write_text("platform:\n  n_nodes: [1, 2\n")
    with pytest.raises(ConfigError, match=r"line \d+, column \d+"):
        parse_config(bad)
    with pytest.raises(ConfigError):
        parse_config(tmp_path / "missing.yaml")
    with pytest.raises(ConfigError, match="mapping"):
        config_from_dict(["a", "b"])
