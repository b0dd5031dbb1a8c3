"""
Experiment configuration for the command-line runner.

A config is a YAML document with one mapping per section::

    run:
      seed: 7
    instance:
      variant: PS
      users: 3
      p_max_dbm: 30
    output:
      dir: results/ps

Unknown sections or keys are rejected, ``run.seed`` is mandatory, and any
``<name>_dbm`` key is converted to watts and stored under ``<name>``.
"""

from __future__ import annotations

import logging
from dataclasses import MISSING, asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Union

import yaml

from . import __version__
from .core import config
from .core.exceptions import ConfigurationError
from .core.feature_flags import resolved_flags
from .utils import atomic_write_text, dbm_to_watts

logger = logging.getLogger(__name__)


# ============================================================================
# SECTIONS
# ============================================================================


@dataclass(frozen=True)
class RunSection:
    seed: int = 0
    name: str = "run"
    workers: int = 1


@dataclass(frozen=True)
class InstanceSection:
    variant: str = "PS"
    users: int = 2
    bs_antennas: int = 4
    ue_antennas: int = 2
    streams: int = 1
    channel_model: str = "rayleigh"
    rician_factor: float = config.RICIAN_FACTOR
    p_max: float = config.P_MAX_W
    noise_power: Optional[float] = None
    path: Optional[str] = None


@dataclass(frozen=True)
class SolverSection:
    max_iters: Optional[int] = None
    tol: Optional[float] = None
    step_size: float = config.PB_STEP_SIZE
    decay: float = config.PB_STEP_DECAY
    iters: int = config.PM_DEFAULT_ITERS
    pb_update_form: Optional[str] = None
    pm_channel_form: Optional[str] = None


@dataclass(frozen=True)
class RieSection:
    variant: str = "PB"
    trials: int = config.RIE_TRIALS
    iters: int = config.RIE_ITERS
    tol: float = config.RIE_EQUIVALENCE_TOL
    pb_update_form: Optional[str] = None
    pm_channel_form: Optional[str] = None


@dataclass(frozen=True)
class EquivarianceSection:
    target: str = "rie"
    variant: str = "PS"
    preset: str = "PS"
    shape: Optional[List[int]] = None
    trials: int = config.EQUIVARIANCE_TRIALS
    tol: float = config.EQUIVARIANCE_TOL


@dataclass(frozen=True)
class ModelSection:
    preset: str = "PS"
    hidden_width: int = config.HIDDEN_WIDTH
    layer_count: int = config.LAYER_COUNT
    attention: str = "interference"
    pooling: str = "sum"
    arms: List[str] = field(default_factory=list)


@dataclass(frozen=True)
class TrainSection:
    train_samples: int = 500
    batch_size: int = config.BATCH_SIZE
    epochs: int = config.EPOCHS
    learning_rate: float = config.LEARNING_RATE
    lr_decay: float = 1.0
    bs_antennas: int = 4
    users: Optional[int] = 2
    k_mean: float = config.TRAIN_K_MEAN
    k_std: float = config.TRAIN_K_STD
    k_max: int = config.TRAIN_K_MAX
    channel_model: str = "rayleigh"
    p_max: float = config.P_MAX_W
    noise_power: Optional[float] = None
    seeds: Optional[List[int]] = None
    test_samples: int = 200


@dataclass(frozen=True)
class EvalSection:
    checkpoint: Optional[str] = None
    train_sizes: List[int] = field(default_factory=lambda: [1, 2, 3])
    test_sizes: List[int] = field(default_factory=lambda: [1, 2, 3, 4, 5, 6])
    samples: int = 200
    bs_antennas: int = 4
    channel_model: str = "rayleigh"
    p_max: float = config.P_MAX_W
    noise_power: Optional[float] = None


@dataclass(frozen=True)
class FlopsSection:
    preset: str = "PS"
    sizes: Dict[str, int] = field(default_factory=lambda: {"AN": 8, "UE": 4})
    dims: Optional[List[str]] = None
    values: List[int] = field(default_factory=lambda: [16, 32, 64, 128])
    hidden_width: int = config.HIDDEN_WIDTH
    layer_count: int = config.LAYER_COUNT
    all_attention: bool = True


@dataclass(frozen=True)
class OutputSection:
    dir: str = "results"
    plotdata: bool = True


_SECTIONS = {
    "run": RunSection,
    "instance": InstanceSection,
    "solver": SolverSection,
    "rie": RieSection,
    "equivariance": EquivarianceSection,
    "model": ModelSection,
    "train": TrainSection,
    "eval": EvalSection,
    "flops": FlopsSection,
    "output": OutputSection,
}


# ============================================================================
# PARSING
# ============================================================================


def _coerce(section: str, key: str, value: Any, default: Any) -> Any:
    """Check ``value`` against the type of the field's default."""
    where = f"[{section}] {key}"
    if value is None or default is None:
        return value
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigurationError(f"{where}: expected true/false, got {value!r}")
        return value
    if isinstance(default, int):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigurationError(f"{where}: expected an integer, got {value!r}")
        return value
    if isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigurationError(f"{where}: expected a number, got {value!r}")
        return float(value)
    if isinstance(default, str):
        if not isinstance(value, str):
            raise ConfigurationError(f"{where}: expected a string, got {value!r}")
        return value
    if isinstance(default, list):
        if not isinstance(value, (list, tuple)):
            raise ConfigurationError(f"{where}: expected a list, got {value!r}")
        return list(value)
    if isinstance(default, dict):
        if not isinstance(value, Mapping):
            raise ConfigurationError(f"{where}: expected a mapping, got {value!r}")
        return dict(value)
    return value


def _default_of(f: Any) -> Any:
    return f.default_factory() if f.default_factory is not MISSING else f.default


def _parse_section(name: str, payload: Any) -> Any:
    cls = _SECTIONS[name]
    if payload is None:
        payload = {}
    if not isinstance(payload, Mapping):
        raise ConfigurationError(f"[{name}] must be a mapping of key: value pairs")
    known = {f.name: f for f in fields(cls)}
    values: Dict[str, Any] = {}
    for raw_key, value in payload.items():
        key = str(raw_key)
        if key.endswith("_dbm"):
            target = key[: -len("_dbm")]
            if target not in known:
                raise ConfigurationError(f"[{name}] unknown key {key!r}")
            if target in payload:
                raise ConfigurationError(f"[{name}] {target!r} given both in watts and in dBm")
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ConfigurationError(f"[{name}] {key}: expected a number, got {value!r}")
            values[target] = dbm_to_watts(value)
            continue
        if key not in known:
            raise ConfigurationError(
                f"[{name}] unknown key {key!r}. Valid options: {', '.join(known)}"
            )
        values[key] = _coerce(name, key, value, _default_of(known[key]))
    return cls(**values)


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated experiment config; every section is present with defaults filled in."""

    run: RunSection
    instance: InstanceSection = field(default_factory=InstanceSection)
    solver: SolverSection = field(default_factory=SolverSection)
    rie: RieSection = field(default_factory=RieSection)
    equivariance: EquivarianceSection = field(default_factory=EquivarianceSection)
    model: ModelSection = field(default_factory=ModelSection)
    train: TrainSection = field(default_factory=TrainSection)
    eval: EvalSection = field(default_factory=EvalSection)
    flops: FlopsSection = field(default_factory=FlopsSection)
    output: OutputSection = field(default_factory=OutputSection)

    @classmethod
    def from_mapping(cls, payload: Any) -> "ExperimentConfig":
        """
        Raises:
            ConfigurationError: On unknown sections or keys, wrongly typed
                values, or a missing ``run.seed``.
        """
        if payload is None:
            payload = {}
        if not isinstance(payload, Mapping):
            raise ConfigurationError("config must be a mapping of sections")
        for section in payload:
            if section not in _SECTIONS:
                raise ConfigurationError(
                    f"unknown section {section!r}. Valid options: {', '.join(_SECTIONS)}"
                )
        run = payload.get("run") or {}
        if not isinstance(run, Mapping) or "seed" not in run or run["seed"] is None:
            raise ConfigurationError("[run] seed is required for reproducibility")
        return cls(**{name: _parse_section(name, payload.get(name)) for name in _SECTIONS})

    @classmethod
    def from_yaml(cls, text: str) -> "ExperimentConfig":
        try:
            payload = yaml.safe_load(text)
        except yaml.YAMLError as exc:
            raise ConfigurationError(f"config is not valid YAML: {exc}") from exc
        return cls.from_mapping(payload)

    @classmethod
    def load(cls, path: Union[str, Path]) -> "ExperimentConfig":
        path = Path(path)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
        logger.debug("loading experiment config %s", path)
        return cls.from_yaml(text)

    def with_overrides(
        self,
        seed: Optional[int] = None,
        trials: Optional[int] = None,
        out: Optional[str] = None,
    ) -> "ExperimentConfig":
        """Apply command-line overrides; ``trials`` sets every trial count."""
        updated = self
        if seed is not None:
            updated = replace(updated, run=replace(updated.run, seed=int(seed)))
        if trials is not None:
            if trials < 1:
                raise ConfigurationError(f"[cli] trials must be >= 1, got {trials}")
            updated = replace(
                updated,
                rie=replace(updated.rie, trials=int(trials)),
                equivariance=replace(updated.equivariance, trials=int(trials)),
            )
        if out is not None:
            updated = replace(updated, output=replace(updated.output, dir=str(out)))
        return updated

    def to_dict(self) -> Dict[str, Any]:
        return {name: asdict(getattr(self, name)) for name in _SECTIONS}

    def resolved(self) -> Dict[str, Any]:
        """Config echo written next to every run's artifacts."""
        return {"version": __version__, "flags": resolved_flags(), "config": self.to_dict()}

    def dump(self, directory: Union[str, Path]) -> Path:
        text = yaml.safe_dump(self.resolved(), sort_keys=False, default_flow_style=False)
        written = atomic_write_text(Path(directory) / "resolved_config.yaml", text)
        logger.info("wrote %s", written)
        return written
