"""
YAML text serialization of problem instances.

Schema (version 1)::

    format: pe-alloc-instance
    version: 1
    variant: PB | PS | PM | PC
    constants: {p_max, noise_power, noise_density, rate_target, streams}
    arrays:    {gains?, channels?, beams?}   # {dtype, shape, data} records
"""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Any, Dict, Union

import yaml

from ..core import config
from ..core.exceptions import ContractViolationError, SchemaError
from ..core.serialization import decode_array, encode_array
from ..utils import atomic_write_text
from .problems import ProblemInstance

logger = logging.getLogger(__name__)

_ARRAY_FIELDS = ("gains", "channels", "beams")
_CONSTANT_FIELDS = ("p_max", "noise_power", "noise_density", "rate_target", "streams")


def instance_to_dict(inst: ProblemInstance) -> Dict[str, Any]:
    arrays = {
        name: encode_array(getattr(inst, name))
        for name in _ARRAY_FIELDS
        if getattr(inst, name) is not None
    }
    constants: Dict[str, Any] = {name: float(getattr(inst, name)) for name in _CONSTANT_FIELDS}
    constants["streams"] = int(inst.streams)
    return {
        "format": config.INSTANCE_FORMAT,
        "version": config.INSTANCE_VERSION,
        "variant": inst.variant,
        "constants": constants,
        "arrays": arrays,
    }


def instance_from_dict(payload: Any) -> ProblemInstance:
    """
    Raises:
        SchemaError: If the payload does not follow the schema or describes
            an invalid instance.
    """
    if not isinstance(payload, dict):
        raise SchemaError("instance payload must be a mapping")
    if payload.get("format") != config.INSTANCE_FORMAT:
        raise SchemaError("unsupported instance format")
    if payload.get("version") != config.INSTANCE_VERSION:
        raise SchemaError("unsupported instance version")
    constants = payload.get("constants")
    arrays = payload.get("arrays")
    if not isinstance(constants, dict) or not isinstance(arrays, dict):
        raise SchemaError("instance constants and arrays must be mappings")

    unknown = (set(constants) - set(_CONSTANT_FIELDS)) | (set(arrays) - set(_ARRAY_FIELDS))
    if unknown:
        raise SchemaError(f"unknown instance fields: {sorted(unknown)}")

    kwargs: Dict[str, Any] = {name: decode_array(record) for name, record in arrays.items()}
    for name, value in constants.items():
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            raise SchemaError(f"constant {name} must be a number")
        kwargs[name] = int(value) if name == "streams" else float(value)
    try:
        return ProblemInstance(variant=payload.get("variant"), **kwargs)
    except ContractViolationError as exc:
        raise SchemaError(f"invalid instance: {exc}") from exc


def dumps_instance(inst: ProblemInstance) -> str:
    return yaml.safe_dump(instance_to_dict(inst), sort_keys=False)


def loads_instance(text: str) -> ProblemInstance:
    try:
        payload = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise SchemaError("instance text is not valid YAML") from exc
    return instance_from_dict(payload)


def save_instance(inst: ProblemInstance, path: Union[str, Path]) -> Path:
    path = Path(path)
    atomic_write_text(path, dumps_instance(inst))
    logger.info("wrote %s instance to %s", inst.variant, path)
    return path


def load_instance(path: Union[str, Path]) -> ProblemInstance:
    return loads_instance(Path(path).read_text(encoding="utf-8"))
