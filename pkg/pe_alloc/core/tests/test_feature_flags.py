"""
Unit tests for update-form feature flags.
"""

import pytest

from pe_alloc.core import feature_flags


@pytest.fixture(autouse=True)
def reset_feature_flags(monkeypatch: pytest.MonkeyPatch) -> None:
    feature_flags.set_pb_update_form(None)
    feature_flags.set_pm_channel_form(None)
    monkeypatch.delenv("PE_ALLOC_PB_UPDATE_FORM", raising=False)
    monkeypatch.delenv("PE_ALLOC_PM_CHANNEL_FORM", raising=False)
    yield
    feature_flags.set_pb_update_form(None)
    feature_flags.set_pm_channel_form(None)
    monkeypatch.delenv("PE_ALLOC_PB_UPDATE_FORM", raising=False)
    monkeypatch.delenv("PE_ALLOC_PM_CHANNEL_FORM", raising=False)


def test_defaults() -> None:
    assert feature_flags.get_pb_update_form() == "lagrangian"
    assert feature_flags.get_pm_channel_form() == "hk"


def test_env_var_controls_pb_form(monkeypatch: pytest.MonkeyPatch) -> None:
    monkeypatch.setenv("PE_ALLOC_PB_UPDATE_FORM", "printed")
    assert feature_flags.get_pb_update_form() == "printed"


def test_env_var_is_case_insensitive(monkeypatch: pytest.MonkeyPatch) -> None:
    monkeypatch.setenv("PE_ALLOC_PM_CHANNEL_FORM", " Printed ")
    assert feature_flags.get_pm_channel_form() == "printed"


def test_prefer_overrides_env(monkeypatch: pytest.MonkeyPatch) -> None:
    monkeypatch.setenv("PE_ALLOC_PB_UPDATE_FORM", "printed")
    assert feature_flags.get_pb_update_form(prefer="lagrangian") == "lagrangian"


def test_override_and_clear(monkeypatch: pytest.MonkeyPatch) -> None:
    monkeypatch.setenv("PE_ALLOC_PM_CHANNEL_FORM", "printed")
    feature_flags.set_pm_channel_form("hk")
    assert feature_flags.get_pm_channel_form() == "hk"
    feature_flags.set_pm_channel_form(None)
    assert feature_flags.get_pm_channel_form() == "printed"


def test_empty_string_clears_override(monkeypatch: pytest.MonkeyPatch) -> None:
    monkeypatch.setenv("PE_ALLOC_PB_UPDATE_FORM", "printed")
    feature_flags.set_pb_update_form("lagrangian")
    feature_flags.set_pb_update_form("")
    assert feature_flags.get_pb_update_form() == "printed"


def test_invalid_prefer_raises_value_error() -> None:
    with pytest.raises(ValueError, match="Invalid PB update form"):
        feature_flags.get_pb_update_form(prefer="invalid")


def test_invalid_env_raises_value_error(monkeypatch: pytest.MonkeyPatch) -> None:
    monkeypatch.setenv("PE_ALLOC_PM_CHANNEL_FORM", "hj")
    with pytest.raises(ValueError, match="Invalid PM channel form"):
        feature_flags.get_pm_channel_form()


def test_invalid_override_raises_value_error() -> None:
    with pytest.raises(ValueError, match="Valid options: lagrangian, printed"):
        feature_flags.set_pb_update_form("invalid")


def test_empty_env_var_treated_as_unset(monkeypatch: pytest.MonkeyPatch) -> None:
    monkeypatch.setenv("PE_ALLOC_PB_UPDATE_FORM", "")
    assert feature_flags.get_pb_update_form() == "lagrangian"


def test_resolved_flags_snapshot(monkeypatch: pytest.MonkeyPatch) -> None:
    monkeypatch.setenv("PE_ALLOC_PM_CHANNEL_FORM", "printed")
    assert feature_flags.resolved_flags() == {
        "pb_update_form": "lagrangian",
        "pm_channel_form": "printed",
    }


@pytest.mark.parametrize("key", sorted(feature_flags.FLAGS))
def test_every_flag_resolves_through_one_chain(key: str, monkeypatch: pytest.MonkeyPatch) -> None:
    spec = feature_flags.FLAGS[key]
    other = next(v for v in spec.valid if v != spec.default)
    assert feature_flags.resolve_flag(key) == spec.default
    monkeypatch.setenv(spec.env_var, other)
    assert feature_flags.resolve_flag(key) == other
    feature_flags.set_flag(key, spec.default)
    assert feature_flags.resolve_flag(key) == spec.default
    assert feature_flags.resolve_flag(key, prefer=other.upper()) == other
    feature_flags.set_flag(key, None)
    assert feature_flags.resolve_flag(key) == other


def test_unknown_flag_raises_key_error() -> None:
    with pytest.raises(KeyError):
        feature_flags.resolve_flag("pc_form")


def test_non_string_value_rejected() -> None:
    with pytest.raises(ValueError, match="Valid options: hk, printed"):
        feature_flags.set_pm_channel_form(3)  # type: ignore[arg-type]
