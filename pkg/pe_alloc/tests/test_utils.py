"""Tests for runner utilities."""

from pathlib import Path

import pytest

from pe_alloc.utils import atomic_write_text, dbm_to_watts, derive_seed, format_duration


def test_derive_seed_is_deterministic_and_label_sensitive() -> None:
    assert derive_seed(7, "trial", 3) == derive_seed(7, "trial", 3)
    assert derive_seed(7, "trial", 3) != derive_seed(7, "trial", 4)
    assert derive_seed(7, "train") != derive_seed(8, "train")
    assert 0 <= derive_seed(0) < 2**32


def test_dbm_to_watts() -> None:
    assert dbm_to_watts(30) == pytest.approx(1.0)
    assert dbm_to_watts(20) == pytest.approx(0.1)


def test_atomic_write_creates_parents_and_replaces(tmp_path: Path) -> None:
    target = tmp_path / "a" / "b.txt"
    atomic_write_text(target, "first")
    atomic_write_text(target, "second")
    assert target.read_text() == "second"
    assert [p.name for p in target.parent.iterdir()] == ["b.txt"]


def test_format_duration() -> None:
    assert format_duration(12.34) == "12.3s"
    assert format_duration(90) == "1.5m"
    assert format_duration(5400) == "1.5h"
