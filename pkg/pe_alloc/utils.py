"""
Utility functions for the experiment runner.
"""

import os
import tempfile
import zlib
from pathlib import Path
from typing import Any, Union

import numpy as np

PathLike = Union[str, Path]


def atomic_write_bytes(path: PathLike, data: bytes) -> Path:
    """
    Write ``data`` to ``path`` atomically.

    The payload goes to a temporary file in the same directory, which then
    replaces ``path``; readers never observe a partial file.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def atomic_write_text(path: PathLike, text: str) -> Path:
    return atomic_write_bytes(path, text.encode("utf-8"))




def derive_seed(base: int, *labels: Any) -> int:
    """
    Deterministic child seed for ``(base, *labels)``.

    Trials, arms and repetitions each get an independent stream that does
    not depend on execution order.
    """
    entropy = [int(base)]
    for label in labels:
        entropy.append(label if isinstance(label, int) else zlib.crc32(str(label).encode("utf-8")))
    return int(np.random.SeedSequence(entropy).generate_state(1)[0])


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** ((float(dbm) - 30.0) / 10.0)


def format_duration(seconds: float) -> str:
    """Format duration in seconds as human-readable string."""
    if seconds < 60:
        return f"{seconds:.1f}s"
    elif seconds < 3600:
        minutes = seconds / 60
        return f"{minutes:.1f}m"
    else:
        hours = seconds / 3600
        return f"{hours:.1f}h"
