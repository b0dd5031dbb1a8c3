"""
Model checkpoints: the parameter payload plus a manifest from which the
model structure is rebuilt without code references.
"""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Any, Dict, Optional, Union

from ..core.exceptions import ContractViolationError, SchemaError
from ..core.feature_flags import resolved_flags
from ..core.serialization import Checkpoint, decode_checkpoint, encode_checkpoint
from ..utils import atomic_write_bytes
from .model import GnnModel, ModelSpec

logger = logging.getLogger(__name__)


def model_to_checkpoint(model: GnnModel, extra: Optional[Dict[str, Any]] = None) -> Checkpoint:
    manifest = model.spec.to_manifest()
    manifest["flags"] = resolved_flags()
    if extra:
        manifest["extra"] = dict(extra)
    return Checkpoint(manifest=manifest, entries=model.store.entries())


def model_from_checkpoint(checkpoint: Checkpoint) -> GnnModel:
    """
    Raises:
        SchemaError: If the manifest cannot describe a model or the
            parameters do not fit the rebuilt layout.
    """
    try:
        spec = ModelSpec.from_manifest(checkpoint.manifest)
        model = GnnModel(spec)
    except (KeyError, TypeError, ValueError, ContractViolationError) as exc:
        raise SchemaError(f"checkpoint manifest does not describe a model: {exc}") from exc
    model.store.load_entries(checkpoint.entries)
    return model


def save_checkpoint(
    model: GnnModel, path: Union[str, Path], extra: Optional[Dict[str, Any]] = None
) -> Path:
    written = atomic_write_bytes(path, encode_checkpoint(model_to_checkpoint(model, extra)))
    logger.info("wrote checkpoint %s (%d parameters)", written, model.parameter_count)
    return written


def load_checkpoint(path: Union[str, Path]) -> GnnModel:
    return model_from_checkpoint(decode_checkpoint(Path(path).read_bytes()))
