"""
Tests for CBOR parameter payloads and base64 array records.
"""

import cbor2
import numpy as np
import pytest

from pe_alloc.core.exceptions import SchemaError
from pe_alloc.core.serialization import (
    Checkpoint,
    ParameterEntry,
    decode_array,
    decode_checkpoint,
    decode_parameters,
    encode_array,
    encode_checkpoint,
    encode_parameters,
)


def test_parameters_keep_order_and_values() -> None:
    entries = [
        ParameterEntry("layer0.w", np.arange(6.0).reshape(2, 3)),
        ParameterEntry("layer0.b", np.array([0.5, -0.25])),
        ParameterEntry("scale", np.array(3.0)),
    ]
    decoded = decode_parameters(encode_parameters(entries))
    assert [e.name for e in decoded] == ["layer0.w", "layer0.b", "scale"]
    for original, restored in zip(entries, decoded):
        np.testing.assert_array_equal(restored.values, original.values)
        assert restored.values.shape == original.values.shape


def test_parameter_payload_is_little_endian_float64() -> None:
    payload = cbor2.loads(encode_parameters([ParameterEntry("w", np.array([1.0]))]))
    assert payload["format"] == "pe-alloc-params"
    assert payload["version"] == 1
    assert payload["entries"][0]["data"] == np.array([1.0], dtype="<f8").tobytes()


def test_duplicate_names_rejected() -> None:
    entries = [ParameterEntry("w", np.ones(2)), ParameterEntry("w", np.ones(2))]
    with pytest.raises(SchemaError, match="duplicate"):
        encode_parameters(entries)


def test_wrong_format_rejected() -> None:
    blob = cbor2.dumps({"format": "other", "version": 1, "entries": []})
    with pytest.raises(SchemaError, match="format"):
        decode_parameters(blob)


def test_truncated_payload_rejected() -> None:
    blob = cbor2.dumps(
        {
            "format": "pe-alloc-params",
            "version": 1,
            "entries": [{"name": "w", "shape": [3], "data": b"\x00" * 16}],
        }
    )
    with pytest.raises(SchemaError, match="does not match shape"):
        decode_parameters(blob)


def test_non_bytes_blob_rejected() -> None:
    with pytest.raises(SchemaError):
        decode_parameters("not bytes")


def test_checkpoint_requires_manifest_keys() -> None:
    with pytest.raises(SchemaError, match="manifest missing"):
        encode_checkpoint(Checkpoint(manifest={"descriptors": []}))


def test_checkpoint_round_trip() -> None:
    manifest = {
        "descriptors": [{"name": "UE", "kind": "normal"}],
        "hidden_width": 8,
        "layer_count": 1,
        "output_dim": 2,
    }
    checkpoint = Checkpoint(manifest, [ParameterEntry("w", np.eye(2))])
    restored = decode_checkpoint(encode_checkpoint(checkpoint))
    assert restored.manifest == manifest
    np.testing.assert_array_equal(restored.entries[0].values, np.eye(2))


def test_complex_array_record() -> None:
    z = np.array([[1 + 2j, -0.5j], [3.0, 0.0]])
    record = encode_array(z)
    assert record["dtype"] == "complex128"
    assert record["shape"] == [2, 2]
    np.testing.assert_array_equal(decode_array(record), z)


def test_array_record_size_checked() -> None:
    record = encode_array(np.ones(3))
    record["shape"] = [4]
    with pytest.raises(SchemaError, match="bytes"):
        decode_array(record)


def test_array_record_rejects_unknown_dtype() -> None:
    with pytest.raises(SchemaError, match="dtype"):
        decode_array({"dtype": "int8", "shape": [1], "data": ""})
