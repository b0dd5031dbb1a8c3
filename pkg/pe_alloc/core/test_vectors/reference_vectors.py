# -*- coding: utf-8 -*-
from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Dict, List

import numpy as np

from pe_alloc.baselines.channels import path_loss_db
from pe_alloc.baselines.problems import ProblemInstance, pb_rates, pc_sum_rate, ps_sum_rate
from pe_alloc.core.exceptions import PEAllocError
from pe_alloc.utils import dbm_to_watts

VECTOR_FILE = Path(__file__).with_name("reference_vectors.json")

RTOL = 1e-9
ATOL = 1e-15


def load_vectors(path: Path = VECTOR_FILE) -> Dict[str, Any]:
    with path.open("r", encoding="utf-8") as handle:
        return json.load(handle)


def compute_expected(vectors: Dict[str, Any]) -> Dict[str, Any]:
    """Recompute every vector's expected value from its inputs."""
    conversion = vectors["dbm_to_watts"]
    loss = vectors["path_loss"]
    pb = vectors["pb_rates"]
    ps = vectors["ps_sum_rate"]
    pc = vectors["pc_sum_rate"]

    pb_inst = ProblemInstance.pb(_require_array(pb.get("gains"), "pb_rates.gains"), noise_density=pb["noise_density"])
    channels = _complex(ps, "channels")
    precoders = _complex(ps, "precoders")

    return {
        "dbm_to_watts": [dbm_to_watts(v) for v in _require_array(conversion.get("dbm"), "dbm_to_watts.dbm")],
        "path_loss": path_loss_db(_require_array(loss.get("distance_m"), "path_loss.distance_m")).tolist(),
        "pb_rates": pb_rates(pb_inst, _require_array(pb.get("p"), "pb_rates.p"),
                             _require_array(pb.get("bandwidth"), "pb_rates.bandwidth")).tolist(),
        "ps_sum_rate": ps_sum_rate(channels, precoders, float(ps["noise_power"])),
        "pc_sum_rate": pc_sum_rate(
            _require_array(pc.get("gains"), "pc_sum_rate.gains"),
            _require_array(pc.get("powers"), "pc_sum_rate.powers"),
            float(pc["noise_power"]),
        ),
    }


def validate_vectors(data: Dict[str, Any]) -> List[str]:
    errors: List[str] = []
    if data.get("version") != "1.0":
        errors.append("version must be 1.0")

    vectors = data.get("vectors")
    if not isinstance(vectors, dict):
        errors.append("vectors must be a dict")
        return errors

    try:
        expected = compute_expected(vectors)
    except (KeyError, TypeError, ValueError, PEAllocError) as exc:
        errors.append(str(exc))
        return errors

    recorded = {
        "dbm_to_watts": vectors["dbm_to_watts"].get("expected_watts"),
        "path_loss": vectors["path_loss"].get("expected_db"),
        "pb_rates": vectors["pb_rates"].get("expected"),
        "ps_sum_rate": vectors["ps_sum_rate"].get("expected"),
        "pc_sum_rate": vectors["pc_sum_rate"].get("expected"),
    }
    for name, value in recorded.items():
        if value is None:
            errors.append(f"{name} has no expected value")
        elif np.shape(value) != np.shape(expected[name]) or not np.allclose(
            value, expected[name], rtol=RTOL, atol=ATOL
        ):
            errors.append(f"{name} mismatch: recorded {value}, computed {expected[name]}")
    return errors


def _complex(vector: Dict[str, Any], name: str) -> np.ndarray:
    re = _require_array(vector.get(f"{name}_re"), f"{name}_re")
    im = _require_array(vector.get(f"{name}_im"), f"{name}_im")
    if re.shape != im.shape:
        raise ValueError(f"{name}_re and {name}_im differ in shape")
    return re + 1j * im


def _require_array(value: Any, field_name: str) -> np.ndarray:
    if not isinstance(value, list) or not value:
        raise TypeError(f"{field_name} must be a non-empty list")
    return np.asarray(value, dtype=np.float64)
