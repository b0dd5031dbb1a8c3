"""
Registry of re-expressed iterations.

Cases are referenced by dotted import path and loaded on demand, so a
variant's module is imported only when it is used.
"""

from __future__ import annotations

import importlib
from typing import Any, Final

from .interfaces import RieCase

VARIANT_REGISTRY: Final[dict[str, str]] = {
    "PB": "pe_alloc.rie.pb.PBCase",
    "PS": "pe_alloc.rie.ps.PSCase",
    "PM": "pe_alloc.rie.pm.PMCase",
    "PC": "pe_alloc.rie.pc.PCCase",
    "PS_POWER": "pe_alloc.rie.fixed_beam.FixedBeamCase",
}


def _format_valid_options() -> str:
    return ", ".join(sorted(VARIANT_REGISTRY.keys()))


def normalize_variant(value: Any) -> str:
    """
    Raises:
        ValueError: If ``value`` names no registered variant.
    """
    if not isinstance(value, str) or value.strip().upper() not in VARIANT_REGISTRY:
        raise ValueError(
            f"Invalid variant: {value!r}. Valid options: {_format_valid_options()}"
        )
    return value.strip().upper()


def _load_case_class(variant: str) -> type[RieCase]:
    import_path = VARIANT_REGISTRY[variant]
    module_path, _, class_name = import_path.rpartition(".")
    try:
        module = importlib.import_module(module_path)
    except ModuleNotFoundError as exc:
        raise ImportError(
            f"Unable to import case module {module_path!r} for {variant!r}"
        ) from exc

    try:
        case_cls = getattr(module, class_name)
    except AttributeError as exc:
        raise ImportError(
            f"Case class {class_name!r} not found in module {module_path!r}"
        ) from exc

    if not isinstance(case_cls, type) or not issubclass(case_cls, RieCase):
        raise TypeError(f"Case reference {import_path!r} does not implement RieCase")

    return case_cls


def get_rie_case(variant: str, **options: Any) -> RieCase:
    """
    Build the case of ``variant``.

    Args:
        variant: One of ``VARIANT_REGISTRY``.
        **options: Passed to the case constructor (``form``/``step_size``
            for PB, ``channel_form`` for PM).

    Raises:
        ValueError: If the variant is unknown.
        ImportError: If the case class cannot be imported.
        TypeError: If the class does not implement RieCase, or an option is
            not accepted by it.
    """
    case_cls = _load_case_class(normalize_variant(variant))
    return case_cls(**options)
