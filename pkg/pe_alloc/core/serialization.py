"""CBOR parameter/checkpoint payloads and base64 array records."""

from __future__ import annotations

import base64
from dataclasses import dataclass, field
from typing import Any, Dict, List, Mapping, Sequence, Tuple

import cbor2
import numpy as np

from . import config
from .exceptions import SchemaError

_LE_FLOAT64 = np.dtype("<f8")


def _require_bytes(value: Any, field_name: str) -> bytes:
    if not isinstance(value, (bytes, bytearray)):
        raise SchemaError(f"{field_name} must be bytes")
    return bytes(value)


def _require_shape(value: Any, field_name: str) -> Tuple[int, ...]:
    if not isinstance(value, (list, tuple)) or not all(
        isinstance(v, int) and v >= 0 for v in value
    ):
        raise SchemaError(f"{field_name} must be a list of non-negative integers")
    return tuple(int(v) for v in value)


# ============================================================================
# ARRAY RECORDS (text formats)
# ============================================================================


def encode_array(values: Any) -> Dict[str, Any]:
    """
    Encode a real or complex array as ``{dtype, shape, data}``.

    ``data`` is base64 of little-endian float64; complex arrays interleave
    real and imaginary parts.
    """
    arr = np.asarray(values)
    if np.iscomplexobj(arr):
        dtype = "complex128"
        flat = np.stack([arr.real, arr.imag], axis=-1).astype(_LE_FLOAT64)
    else:
        dtype = "float64"
        flat = arr.astype(_LE_FLOAT64)
    return {
        "dtype": dtype,
        "shape": [int(s) for s in arr.shape],
        "data": base64.b64encode(np.ascontiguousarray(flat).tobytes()).decode("ascii"),
    }


def decode_array(record: Any) -> np.ndarray:
    if not isinstance(record, Mapping):
        raise SchemaError("array record must be a mapping")
    dtype = record.get("dtype")
    if dtype not in ("float64", "complex128"):
        raise SchemaError(f"unsupported array dtype: {dtype!r}")
    shape = _require_shape(record.get("shape"), "shape")
    data = record.get("data")
    if not isinstance(data, str):
        raise SchemaError("array data must be a base64 string")
    try:
        raw = base64.b64decode(data.encode("ascii"), validate=True)
    except (ValueError, UnicodeEncodeError) as exc:
        raise SchemaError("array data is not valid base64") from exc

    count = int(np.prod(shape)) if shape else 1
    width = 2 if dtype == "complex128" else 1
    if len(raw) != 8 * count * width:
        raise SchemaError(
            f"array payload has {len(raw)} bytes, shape {list(shape)} needs {8 * count * width}"
        )
    flat = np.frombuffer(raw, dtype=_LE_FLOAT64).astype(np.float64)
    if dtype == "complex128":
        pairs = flat.reshape(shape + (2,))
        return pairs[..., 0] + 1j * pairs[..., 1]
    return flat.reshape(shape)


# ============================================================================
# PARAMETERS
# ============================================================================


@dataclass(frozen=True)
class ParameterEntry:
    name: str
    values: np.ndarray

    def validate(self) -> None:
        if not isinstance(self.name, str) or not self.name:
            raise SchemaError("parameter name must be a non-empty string")
        if not np.all(np.isfinite(self.values)):
            raise SchemaError(f"parameter {self.name} has non-finite values")


def _encode_entries(entries: Sequence[ParameterEntry]) -> List[Dict[str, Any]]:
    seen = set()
    encoded = []
    for entry in entries:
        entry.validate()
        if entry.name in seen:
            raise SchemaError(f"duplicate parameter name: {entry.name}")
        seen.add(entry.name)
        arr = np.ascontiguousarray(np.asarray(entry.values, dtype=_LE_FLOAT64))
        encoded.append(
            {"name": entry.name, "shape": [int(s) for s in arr.shape], "data": arr.tobytes()}
        )
    return encoded


def _decode_entries(raw: Any) -> List[ParameterEntry]:
    if not isinstance(raw, list):
        raise SchemaError("entries must be a list")
    entries = []
    for item in raw:
        if not isinstance(item, dict):
            raise SchemaError("parameter entry must be a map")
        name = item.get("name")
        shape = _require_shape(item.get("shape"), "shape")
        data = _require_bytes(item.get("data", b""), "data")
        count = int(np.prod(shape)) if shape else 1
        if len(data) != 8 * count:
            raise SchemaError(f"parameter {name} payload does not match shape {list(shape)}")
        values = np.frombuffer(data, dtype=_LE_FLOAT64).astype(np.float64).reshape(shape)
        entry = ParameterEntry(name=name, values=values)
        entry.validate()
        entries.append(entry)
    return entries


def encode_parameters(entries: Sequence[ParameterEntry]) -> bytes:
    """Serialize named parameters in their given order."""
    payload = {
        "format": config.PARAMS_FORMAT,
        "version": config.PARAMS_VERSION,
        "entries": _encode_entries(entries),
    }
    return cbor2.dumps(payload)


def decode_parameters(blob: bytes) -> List[ParameterEntry]:
    try:
        payload = cbor2.loads(_require_bytes(blob, "parameter blob"))
    except cbor2.CBORDecodeError as exc:
        raise SchemaError("parameter blob is not valid CBOR") from exc
    if not isinstance(payload, dict):
        raise SchemaError("parameter payload must be a map")
    if payload.get("format") != config.PARAMS_FORMAT:
        raise SchemaError("unsupported parameter format")
    if payload.get("version") != config.PARAMS_VERSION:
        raise SchemaError("unsupported parameter version")
    return _decode_entries(payload.get("entries"))


# ============================================================================
# CHECKPOINTS
# ============================================================================


@dataclass
class Checkpoint:
    manifest: Dict[str, Any]
    entries: List[ParameterEntry] = field(default_factory=list)

    def validate(self) -> None:
        if not isinstance(self.manifest, dict):
            raise SchemaError("checkpoint manifest must be a map")
        for key in ("descriptors", "hidden_width", "layer_count", "output_dim"):
            if key not in self.manifest:
                raise SchemaError(f"checkpoint manifest missing {key}")


def encode_checkpoint(checkpoint: Checkpoint) -> bytes:
    checkpoint.validate()
    payload = {
        "format": config.CHECKPOINT_FORMAT,
        "version": config.CHECKPOINT_VERSION,
        "manifest": checkpoint.manifest,
        "entries": _encode_entries(checkpoint.entries),
    }
    return cbor2.dumps(payload)


def decode_checkpoint(blob: bytes) -> Checkpoint:
    try:
        payload = cbor2.loads(_require_bytes(blob, "checkpoint blob"))
    except cbor2.CBORDecodeError as exc:
        raise SchemaError("checkpoint is not valid CBOR") from exc
    if not isinstance(payload, dict):
        raise SchemaError("checkpoint payload must be a map")
    if payload.get("format") != config.CHECKPOINT_FORMAT:
        raise SchemaError("unsupported checkpoint format")
    if payload.get("version") != config.CHECKPOINT_VERSION:
        raise SchemaError("unsupported checkpoint version")
    checkpoint = Checkpoint(
        manifest=payload.get("manifest"),
        entries=_decode_entries(payload.get("entries")),
    )
    checkpoint.validate()
    return checkpoint
