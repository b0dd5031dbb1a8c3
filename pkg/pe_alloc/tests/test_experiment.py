"""Tests for the YAML experiment config."""

from __future__ import annotations

from pathlib import Path

import pytest
import yaml

from pe_alloc import __version__
from pe_alloc.core.exceptions import ConfigurationError
from pe_alloc.experiment import ExperimentConfig


def test_defaults_fill_every_section() -> None:
    cfg = ExperimentConfig.from_mapping({"run": {"seed": 7}})
    assert cfg.run.seed == 7
    assert cfg.instance.variant == "PS"
    assert cfg.model.arms == []
    assert cfg.flops.sizes == {"AN": 8, "UE": 4}
    assert set(cfg.to_dict()) == {
        "run", "instance", "solver", "rie", "equivariance", "model", "train", "eval", "flops", "output",
    }


def test_seed_is_required() -> None:
    with pytest.raises(ConfigurationError, match="seed is required"):
        ExperimentConfig.from_mapping({"instance": {"users": 3}})
    with pytest.raises(ConfigurationError, match="seed is required"):
        ExperimentConfig.from_mapping({"run": {"seed": None}})


def test_unknown_section_and_key_rejected() -> None:
    with pytest.raises(ConfigurationError, match="unknown section 'solvers'"):
        ExperimentConfig.from_mapping({"run": {"seed": 1}, "solvers": {}})
    with pytest.raises(ConfigurationError, match=r"\[instance\] unknown key 'user'"):
        ExperimentConfig.from_mapping({"run": {"seed": 1}, "instance": {"user": 3}})


@pytest.mark.parametrize(
    "section, key, value",
    [
        ("run", "seed", "seven"),
        ("instance", "users", 2.5),
        ("rie", "tol", "small"),
        ("output", "plotdata", "yes"),
        ("eval", "test_sizes", 4),
        ("flops", "sizes", [8, 4]),
    ],
)
def test_wrongly_typed_values_rejected(section: str, key: str, value) -> None:
    payload = {"run": {"seed": 1}}
    payload.setdefault(section, {})[key] = value
    with pytest.raises(ConfigurationError, match=key):
        ExperimentConfig.from_mapping(payload)


def test_dbm_keys_convert_to_watts() -> None:
    cfg = ExperimentConfig.from_mapping(
        {"run": {"seed": 1}, "instance": {"p_max_dbm": 30, "noise_power_dbm": -90}}
    )
    assert cfg.instance.p_max == pytest.approx(1.0)
    assert cfg.instance.noise_power == pytest.approx(1e-12)
    with pytest.raises(ConfigurationError, match="both in watts and in dBm"):
        ExperimentConfig.from_mapping({"run": {"seed": 1}, "instance": {"p_max": 1.0, "p_max_dbm": 30}})


def test_integer_accepted_for_float_field() -> None:
    cfg = ExperimentConfig.from_mapping({"run": {"seed": 1}, "rie": {"tol": 1}})
    assert isinstance(cfg.rie.tol, float)


def test_overrides() -> None:
    cfg = ExperimentConfig.from_mapping({"run": {"seed": 1}}).with_overrides(seed=9, trials=4, out="x")
    assert cfg.run.seed == 9
    assert cfg.rie.trials == 4
    assert cfg.equivariance.trials == 4
    assert cfg.output.dir == "x"
    with pytest.raises(ConfigurationError, match="trials"):
        cfg.with_overrides(trials=0)


def test_invalid_yaml_and_missing_file(tmp_path: Path) -> None:
    with pytest.raises(ConfigurationError, match="not valid YAML"):
        ExperimentConfig.from_yaml("run: [seed: 1")
    with pytest.raises(ConfigurationError, match="cannot read"):
        ExperimentConfig.load(tmp_path / "absent.yaml")


def test_dump_writes_resolved_config(tmp_path: Path) -> None:
    cfg = ExperimentConfig.from_mapping({"run": {"seed": 3, "name": "smoke"}})
    path = cfg.dump(tmp_path)
    data = yaml.safe_load(path.read_text())
    assert data["version"] == __version__
    assert data["config"]["run"] == {"seed": 3, "name": "smoke", "workers": 1}
    assert "pb_update_form" in data["flags"]
    assert ExperimentConfig.from_mapping(data["config"]) == cfg
