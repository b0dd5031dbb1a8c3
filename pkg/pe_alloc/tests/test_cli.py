"""CLI tests for the experiment subcommands."""

from __future__ import annotations

import json
from pathlib import Path

import yaml
from click.testing import CliRunner

from pe_alloc import __version__, cli


def _write_config(tmp_path: Path, payload: dict) -> Path:
    path = tmp_path / "experiment.yaml"
    path.write_text(yaml.safe_dump(payload), encoding="utf-8")
    return path


def _invoke(*args: str):
    return CliRunner().invoke(cli.main, list(args))


def test_help_lists_subcommands() -> None:
    result = _invoke("--help")
    assert result.exit_code == 0
    for name in ("solve", "verify-rie", "check-equivariance", "train", "eval-generalization", "count-flops"):
        assert name in result.output


def test_version_option() -> None:
    result = _invoke("--version")
    assert result.exit_code == 0
    assert __version__ in result.output


def test_verify_rie_pb_passes_and_writes_artifacts(tmp_path: Path) -> None:
    config = _write_config(tmp_path, {"run": {"seed": 3}, "rie": {"variant": "PB", "iters": 3}})
    out = tmp_path / "out"
    result = _invoke("verify-rie", "--config", str(config), "--out", str(out), "--trials", "2")
    assert result.exit_code == 0, result.output

    header = (out / "equivalence.csv").read_text().splitlines()[0]
    assert header == "trial,iteration,max_abs_error"
    assert (out / "equivalence_plot.csv").read_text().startswith("x,y,series")

    resolved = yaml.safe_load((out / "resolved_config.yaml").read_text())
    assert resolved["version"] == __version__
    assert resolved["config"]["run"]["seed"] == 3
    assert resolved["config"]["rie"]["trials"] == 2

    summary = json.loads((out / "summary.json").read_text())
    assert summary["passed"] is True
    assert summary["command"] == "verify-rie"


def test_rerun_with_same_seed_is_byte_identical(tmp_path: Path) -> None:
    config = _write_config(tmp_path, {"run": {"seed": 11}, "rie": {"variant": "PC", "iters": 3}})
    for name in ("a", "b"):
        result = _invoke("verify-rie", "--config", str(config), "--out", str(tmp_path / name), "--trials", "2")
        assert result.exit_code == 0, result.output
    assert (tmp_path / "a" / "equivalence.csv").read_bytes() == (tmp_path / "b" / "equivalence.csv").read_bytes()


def test_sorting_control_fails_with_acceptance_code(tmp_path: Path) -> None:
    config = _write_config(
        tmp_path, {"run": {"seed": 0}, "equivariance": {"target": "sort", "trials": 10}}
    )
    result = _invoke("check-equivariance", "--config", str(config), "--out", str(tmp_path / "out"))
    assert result.exit_code == cli.EXIT_ACCEPTANCE
    summary = json.loads((tmp_path / "out" / "summary.json").read_text())
    assert summary["passed"] is False
    assert summary["failed_trials"] > 0


def test_model_equivariance_passes(tmp_path: Path) -> None:
    config = _write_config(
        tmp_path,
        {
            "run": {"seed": 2},
            "equivariance": {"target": "model", "preset": "PS", "trials": 5},
            "model": {"hidden_width": 8, "layer_count": 1},
        },
    )
    result = _invoke("check-equivariance", "--config", str(config), "--out", str(tmp_path / "out"))
    assert result.exit_code == 0, result.output
    header = (tmp_path / "out" / "equivariance.csv").read_text().splitlines()[0]
    assert header == "target,trials,failed_trials,max_abs_error,passed"


def test_missing_seed_is_invalid_input(tmp_path: Path) -> None:
    config = _write_config(tmp_path, {"rie": {"variant": "PB"}})
    result = _invoke("verify-rie", "--config", str(config), "--out", str(tmp_path / "out"))
    assert result.exit_code == cli.EXIT_INVALID
    assert "seed is required" in result.output


def test_unknown_key_is_invalid_input(tmp_path: Path) -> None:
    config = _write_config(tmp_path, {"run": {"seed": 1}, "rie": {"variant": "PB", "trails": 3}})
    result = _invoke("verify-rie", "--config", str(config), "--out", str(tmp_path / "out"))
    assert result.exit_code == cli.EXIT_INVALID
    assert "unknown key 'trails'" in result.output


def test_unknown_variant_is_invalid_input(tmp_path: Path) -> None:
    config = _write_config(tmp_path, {"run": {"seed": 1}, "rie": {"variant": "PX"}})
    result = _invoke("verify-rie", "--config", str(config), "--out", str(tmp_path / "out"))
    assert result.exit_code == cli.EXIT_INVALID
    assert "Valid options" in result.output


def test_solve_ps_writes_trace_and_instance(tmp_path: Path) -> None:
    config = _write_config(
        tmp_path,
        {
            "run": {"seed": 5},
            "instance": {"variant": "PS", "users": 2, "bs_antennas": 3, "p_max_dbm": 30},
            "solver": {"max_iters": 20},
        },
    )
    out = tmp_path / "out"
    result = _invoke("solve", "--config", str(config), "--out", str(out))
    assert result.exit_code == 0, result.output
    lines = (out / "solve.csv").read_text().splitlines()
    assert lines[0] == "iteration,objective"
    assert 2 <= len(lines) <= 22
    assert (out / "instance.yaml").exists()

    rerun = _write_config(
        tmp_path,
        {"run": {"seed": 99}, "instance": {"variant": "PS", "path": str(out / "instance.yaml")}},
    )
    again = _invoke("solve", "--config", str(rerun), "--out", str(tmp_path / "again"))
    assert again.exit_code == 0, again.output
    assert json.loads((tmp_path / "again" / "summary.json").read_text())["users"] == 2


def test_solve_rejects_instance_of_other_variant(tmp_path: Path) -> None:
    first = _write_config(tmp_path, {"run": {"seed": 5}, "instance": {"variant": "PS", "users": 2}})
    assert _invoke("solve", "--config", str(first), "--out", str(tmp_path / "ps")).exit_code == 0
    mismatch = _write_config(
        tmp_path,
        {"run": {"seed": 5}, "instance": {"variant": "PC", "path": str(tmp_path / "ps" / "instance.yaml")}},
    )
    result = _invoke("solve", "--config", str(mismatch), "--out", str(tmp_path / "pc"))
    assert result.exit_code == cli.EXIT_INVALID


def test_count_flops_writes_sweeps_and_slopes(tmp_path: Path) -> None:
    config = _write_config(
        tmp_path,
        {
            "run": {"seed": 0},
            "flops": {"hidden_width": 8, "layer_count": 2, "values": [16, 32, 64]},
        },
    )
    out = tmp_path / "out"
    result = _invoke("count-flops", "--config", str(config), "--out", str(out))
    assert result.exit_code == 0, result.output
    for stem in ("flops", "flops_pairwise", "flops_all_attention", "flops_all_attention_pairwise"):
        assert (out / f"{stem}.csv").read_text().splitlines()[0] == "dim,size,count"
    slopes = json.loads((out / "summary.json").read_text())["slopes"]
    assert abs(slopes["flops"]["AN"] - 1.0) < 1e-9


def test_train_then_eval_generalization(tmp_path: Path) -> None:
    out = tmp_path / "train"
    train_config = _write_config(
        tmp_path,
        {
            "run": {"seed": 4},
            "model": {"hidden_width": 8, "layer_count": 1},
            "train": {"train_samples": 8, "batch_size": 4, "epochs": 1, "test_samples": 4},
        },
    )
    result = _invoke("train", "--config", str(train_config), "--out", str(out))
    assert result.exit_code == 0, result.output
    assert (out / "loss.csv").read_text().splitlines()[0] == "epoch,loss"
    assert (out / "model.ckpt").exists()

    eval_config = _write_config(
        tmp_path,
        {
            "run": {"seed": 4},
            "eval": {"checkpoint": str(out / "model.ckpt"), "train_sizes": [2], "test_sizes": [1, 2], "samples": 3},
        },
    )
    result = _invoke("eval-generalization", "--config", str(eval_config), "--out", str(tmp_path / "eval"))
    assert result.exit_code == 0, result.output
    lines = (tmp_path / "eval" / "se_ratio.csv").read_text().splitlines()
    assert lines[0] == "K,mean_ratio,ci_low,ci_high"
    assert len(lines) == 3


def test_train_rejects_non_ps_preset(tmp_path: Path) -> None:
    config = _write_config(tmp_path, {"run": {"seed": 4}, "model": {"preset": "PC"}})
    result = _invoke("train", "--config", str(config), "--out", str(tmp_path / "out"))
    assert result.exit_code == cli.EXIT_INVALID


def test_eval_requires_checkpoint(tmp_path: Path) -> None:
    config = _write_config(tmp_path, {"run": {"seed": 4}})
    result = _invoke("eval-generalization", "--config", str(config), "--out", str(tmp_path / "out"))
    assert result.exit_code == cli.EXIT_INVALID
    assert "checkpoint" in result.output


def test_run_experiment_returns_exit_status(tmp_path: Path) -> None:
    good = _write_config(tmp_path, {"run": {"seed": 1}, "rie": {"variant": "PB", "iters": 2}})
    assert cli.run_experiment("verify-rie", good, "--trials", "1", "--out", str(tmp_path / "ok")) == cli.EXIT_OK
    control = _write_config(tmp_path, {"run": {"seed": 1}, "equivariance": {"target": "sort"}})
    assert cli.run_experiment("check-equivariance", control, "--out", str(tmp_path / "sort")) == cli.EXIT_ACCEPTANCE
    assert cli.run_experiment("verify-rie", tmp_path / "missing.yaml") == cli.EXIT_INVALID
