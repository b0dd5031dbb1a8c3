"""
Feature flags selecting between alternative readings of update equations.

Two update rules admit more than one reading: the sign pattern of the
bandwidth/power gradient steps and the channel used in the intra-UE
interference coefficient of the approximated MU-MIMO precoder update. Each
flag resolves in the order: explicit argument, in-memory override,
environment variable, default.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Final


@dataclass(frozen=True)
class FlagSpec:
    key: str
    label: str
    env_var: str
    valid: tuple[str, ...]
    default: str

    def normalize(self, value: str | None) -> str | None:
        """Lower-cased value, or None for unset; raises ValueError when invalid."""
        if value is None or value == "":
            return None
        if not isinstance(value, str) or value.strip().lower() not in self.valid:
            raise ValueError(
                f"Invalid {self.label}: {value!r}. Valid options: {', '.join(self.valid)}"
            )
        return value.strip().lower()


FLAGS: Final[dict[str, FlagSpec]] = {
    spec.key: spec
    for spec in (
        FlagSpec(
            key="pb_update_form",
            label="PB update form",
            env_var="PE_ALLOC_PB_UPDATE_FORM",
            valid=("lagrangian", "printed"),
            default="lagrangian",
        ),
        FlagSpec(
            key="pm_channel_form",
            label="PM channel form",
            env_var="PE_ALLOC_PM_CHANNEL_FORM",
            valid=("hk", "printed"),
            default="hk",
        ),
    )
}

_overrides: dict[str, str] = {}


def resolve_flag(key: str, prefer: str | None = None) -> str:
    """
    Resolve flag ``key``: ``prefer``, then the override, then the
    environment, then the default.

    Raises:
        KeyError: On an unknown flag.
        ValueError: If ``prefer`` or the environment value is invalid.
    """
    spec = FLAGS[key]
    preferred = spec.normalize(prefer)
    if preferred is not None:
        return preferred
    if key in _overrides:
        return _overrides[key]
    env_value = spec.normalize(os.getenv(spec.env_var))
    return env_value if env_value is not None else spec.default


def set_flag(key: str, value: str | None) -> None:
    """Set or clear (None) the in-memory override of flag ``key``."""
    normalized = FLAGS[key].normalize(value)
    if normalized is None:
        _overrides.pop(key, None)
    else:
        _overrides[key] = normalized


def get_pb_update_form(prefer: str | None = None) -> str:
    """Sign convention of the bandwidth/power gradient updates ("lagrangian" or "printed")."""
    return resolve_flag("pb_update_form", prefer)


def set_pb_update_form(value: str | None) -> None:
    set_flag("pb_update_form", value)


def get_pm_channel_form(prefer: str | None = None) -> str:
    """
    Channel used in the intra-UE interference coefficient of the
    approximated MU-MIMO precoder update ("hk" or "printed").
    """
    return resolve_flag("pm_channel_form", prefer)


def set_pm_channel_form(value: str | None) -> None:
    set_flag("pm_channel_form", value)


def resolved_flags() -> dict[str, str]:
    """Snapshot of every flag, as recorded in result directories."""
    return {key: resolve_flag(key) for key in FLAGS}
