"""
Command-Line Interface for the permutation-equivariant allocation toolkit

Every subcommand reads an experiment config (YAML), writes its artifacts
atomically into the output directory next to the resolved config, and
exits with 0 on success, 1 on invalid input and 2 when an acceptance check
fails.
"""

import functools
import logging
import platform
import subprocess
import sys
import time
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Tuple, Union

import click
import numpy as np

from pe_alloc import __version__
from pe_alloc.baselines.channels import generate_channels
from pe_alloc.baselines.gd_bandwidth import gd_pb_solve
from pe_alloc.baselines.instance_io import load_instance, save_instance
from pe_alloc.baselines.problems import ProblemInstance
from pe_alloc.baselines.wmmse_mimo import wmmse_pm_solve
from pe_alloc.baselines.wmmse_miso import wmmse_ps_solve
from pe_alloc.baselines.wmmse_power import fixed_beam_power_solve, wmmse_pc_solve
from pe_alloc.core.exceptions import (
    ConfigurationError,
    ContractViolationError,
    InfeasibleProblemError,
    SchemaError,
    TrainingDivergenceError,
)
from pe_alloc.core.permutation import AxisRule, PermutationScheme, check_equivariance
from pe_alloc.experiment import ExperimentConfig
from pe_alloc.gnn.checkpoint import load_checkpoint, save_checkpoint
from pe_alloc.gnn.descriptors import SetDescriptor, preset_descriptors
from pe_alloc.gnn.evaluation import compare_arms, eval_se_ratio, eval_size_generalization
from pe_alloc.gnn.flops import all_attention_variant, count_flops, fit_loglog_slope, flop_scaling
from pe_alloc.gnn.model import build_gnn_from_problem
from pe_alloc.gnn.training import TrainConfig, draw_ps_dataset, train_unsupervised
from pe_alloc.report_generator import ReportGenerator
from pe_alloc.rie.equivalence import verify_rie_equivalence
from pe_alloc.rie.registry import get_rie_case, normalize_variant
from pe_alloc.utils import derive_seed, format_duration

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_ACCEPTANCE = 2

_INPUT_ERRORS = (
    ConfigurationError,
    SchemaError,
    ContractViolationError,
    InfeasibleProblemError,
    TrainingDivergenceError,
    ValueError,
    OSError,
)


@click.group()
@click.version_option(version=__version__)
@click.option(
    "--log-level",
    type=click.Choice(
        ["debug", "info", "warning", "error", "critical"],
        case_sensitive=False,
    ),
    default="warning",
    show_default=True,
    help="Logging verbosity",
)
def main(log_level):
    """
    pe-alloc - permutation-equivariant resource allocation toolkit

    Solve allocation instances with the reference solvers, verify their
    re-expressed iterations, check equivariance, and train, evaluate and
    cost descriptor-built GNNs.
    """
    _configure_logging(log_level)


def _configure_logging(level: str) -> None:
    numeric_level = getattr(logging, level.upper(), logging.WARNING)
    logging.basicConfig(level=numeric_level, force=True)


def _get_git_commit() -> Optional[str]:
    try:
        result = subprocess.run(
            ["git", "rev-parse", "HEAD"],
            check=True,
            capture_output=True,
            text=True,
        )
        return result.stdout.strip()
    except Exception:
        return None


def _build_reproducibility(cfg: ExperimentConfig) -> dict:
    return {
        "command": " ".join(sys.argv),
        "git_commit": _get_git_commit(),
        "python_version": platform.python_version(),
        "os": platform.platform(),
        "seed": cfg.run.seed,
    }


def _fail(message: str, code: int) -> None:
    click.echo(click.style(f"✗ Error: {message}", fg="red"), err=True)
    sys.exit(code)


def experiment_command(name: str, help_text: str) -> Callable:
    """
    Register a subcommand taking ``--config/--out/--seed/--trials``.

    The wrapped function receives the resolved config and a report
    generator and returns ``(passed, summary)``.
    """

    def decorate(fn: Callable[[ExperimentConfig, ReportGenerator], Tuple[bool, Dict[str, Any]]]):
        @main.command(name=name, help=help_text)
        @click.option("--config", "config_path", type=click.Path(), required=True, help="Experiment config (YAML)")
        @click.option("--out", type=click.Path(), default=None, help="Output directory (overrides output.dir)")
        @click.option("--seed", type=int, default=None, help="Base seed (overrides run.seed)")
        @click.option("--trials", type=int, default=None, help="Trial count (overrides rie/equivariance trials)")
        @functools.wraps(fn)
        def command(config_path, out, seed, trials):
            started = time.time()
            try:
                cfg = ExperimentConfig.load(config_path).with_overrides(seed=seed, trials=trials, out=out)
                reports = ReportGenerator(cfg.output.dir)
                cfg.dump(cfg.output.dir)
                passed, summary = fn(cfg, reports)
                summary = dict(summary, command=name, passed=passed)
                summary["reproducibility"] = _build_reproducibility(cfg)
                reports.write_summary(summary)
            except _INPUT_ERRORS as e:
                logger.debug("%s failed", name, exc_info=True)
                _fail(str(e), EXIT_INVALID)
                return

            click.echo(f"\nArtifacts in {cfg.output.dir} ({format_duration(time.time() - started)}):")
            for path in reports.written:
                click.echo(f"  {path.name}")
            if not passed:
                click.echo(click.style(f"\n✗ {name}: acceptance check failed", fg="red"), err=True)
                sys.exit(EXIT_ACCEPTANCE)
            click.echo(click.style(f"\n✓ {name} complete", fg="green"))

        return command

    return decorate


def _formats(cfg: ExperimentConfig) -> Tuple[str, ...]:
    return ("csv", "plotdata") if cfg.output.plotdata else ("csv",)


# ============================================================================
# solve
# ============================================================================


def _instance(cfg: ExperimentConfig, variant: str) -> ProblemInstance:
    section = cfg.instance
    if section.path:
        return load_instance(section.path)
    sizes = {
        "users": section.users,
        "bs_antennas": section.bs_antennas,
        "ue_antennas": section.ue_antennas,
        "streams": section.streams,
    }
    return generate_channels(
        "PC" if variant == "PS_POWER" else variant,
        sizes,
        model=section.channel_model,
        seed=derive_seed(cfg.run.seed, "instance"),
        factor=section.rician_factor,
        p_max=section.p_max,
        noise_power=section.noise_power,
    )


def _solve(cfg: ExperimentConfig, inst: ProblemInstance, variant: str) -> Any:
    solver = cfg.solver
    limits = {k: v for k, v in (("max_iters", solver.max_iters), ("tol", solver.tol)) if v is not None}
    if variant == "PB":
        return gd_pb_solve(
            inst, step_size=solver.step_size, decay=solver.decay, form=solver.pb_update_form, **limits
        )
    if variant == "PS":
        return wmmse_ps_solve(inst, **limits)
    if variant == "PM":
        return wmmse_pm_solve(inst, iters=solver.iters, channel_form=solver.pm_channel_form)
    if variant == "PC":
        return wmmse_pc_solve(inst, **limits)
    return fixed_beam_power_solve(inst, **limits)


@experiment_command("solve", "Solve one instance with its reference solver.")
def solve(cfg: ExperimentConfig, reports: ReportGenerator):
    variant = normalize_variant(cfg.instance.variant)
    inst = _instance(cfg, variant)
    if inst.variant != ("PC" if variant == "PS_POWER" else variant):
        raise ConfigurationError(
            f"[instance] variant {variant} does not match the {inst.variant} instance file"
        )
    save_instance(inst, Path(cfg.output.dir) / "instance.yaml")
    solution = _solve(cfg, inst, variant)
    trace = solution.trace["objective"] if isinstance(solution.trace, dict) else solution.trace
    rows = [{"iteration": i, "objective": float(v)} for i, v in enumerate(np.asarray(trace))]
    reports.emit_report(rows, "solve", formats=_formats(cfg))
    summary = {
        "variant": variant,
        "users": inst.users,
        "objective": rows[-1]["objective"],
        "iterations": solution.iterations,
        "converged": bool(getattr(solution, "converged", True)),
    }
    reports.console_table(f"{variant} solution", [summary])
    return True, summary


# ============================================================================
# verify-rie
# ============================================================================


def _case_options(variant: str, pb_form: Optional[str], pm_form: Optional[str]) -> Dict[str, Any]:
    if variant == "PB" and pb_form:
        return {"form": pb_form}
    if variant == "PM" and pm_form:
        return {"channel_form": pm_form}
    return {}


@experiment_command("verify-rie", "Run raw and re-expressed iterations side by side.")
def verify_rie(cfg: ExperimentConfig, reports: ReportGenerator):
    section = cfg.rie
    variant = normalize_variant(section.variant)
    report = verify_rie_equivalence(
        variant,
        trials=section.trials,
        iters=section.iters,
        tol=section.tol,
        seed=cfg.run.seed,
        workers=cfg.run.workers,
        **_case_options(variant, section.pb_update_form, section.pm_channel_form),
    )
    reports.emit_report(report.to_rows(), "equivalence", formats=_formats(cfg))
    summary = report.to_dict()
    reports.console_table(f"{variant} equivalence", [summary], ["variant", "trials", "iters", "worst_error", "passed"])
    return report.passed, summary


# ============================================================================
# check-equivariance
# ============================================================================


def _default_model_shape(descriptors: List[SetDescriptor]) -> Tuple[int, ...]:
    """Two subsets per nested set, three elements per normal set, two features."""
    dims = [2 * d.flat_subset_size if d.flat_subset_size else 3 for d in descriptors]
    return tuple(dims) + (2,)


def _equivariance_target(cfg: ExperimentConfig) -> Tuple[Callable, PermutationScheme, PermutationScheme, Any]:
    section = cfg.equivariance
    rng = np.random.default_rng(derive_seed(cfg.run.seed, "equivariance-sample"))
    target = section.target.strip().lower()
    if target == "rie":
        case = get_rie_case(section.variant)
        state = case.sample_state(rng)
        input_scheme, output_scheme = case.schemes(state)
        return case.step_function(state), input_scheme, output_scheme, state.D
    if target == "model":
        descriptors = preset_descriptors(section.preset)
        model = build_gnn_from_problem(
            descriptors,
            [cfg.model.hidden_width],
            cfg.model.layer_count,
            attention=cfg.model.attention,
            pooling=cfg.model.pooling,
            seed=derive_seed(cfg.run.seed, "init"),
        )
        shape = tuple(section.shape) if section.shape else _default_model_shape(descriptors)
        return model, model.scheme(), model.scheme(), rng.standard_normal(shape)
    if target == "sort":
        shape = tuple(section.shape) if section.shape else (5, 2)
        scheme = PermutationScheme(
            [AxisRule.arbitrary("K")] + [AxisRule.fixed() for _ in shape[1:]]
        )
        return (lambda x: np.sort(x, axis=0)), scheme, scheme, rng.standard_normal(shape)
    raise ConfigurationError(
        f"[equivariance] target: {section.target!r}. Valid options: rie, model, sort"
    )


@experiment_command("check-equivariance", "Check a step, model or control function for equivariance.")
def check_equivariance_command(cfg: ExperimentConfig, reports: ReportGenerator):
    section = cfg.equivariance
    f, input_scheme, output_scheme, sample = _equivariance_target(cfg)
    report = check_equivariance(
        f,
        input_scheme,
        output_scheme,
        sample,
        trials=section.trials,
        tol=section.tol,
        seed=derive_seed(cfg.run.seed, "equivariance"),
    )
    row = {"target": section.target, **report.to_dict()}
    reports.emit_report([row], "equivariance")
    reports.console_table("Equivariance", [row], ["target", "trials", "failed_trials", "max_abs_error", "passed"])
    return report.passed, row


# ============================================================================
# train
# ============================================================================


def _train_config(cfg: ExperimentConfig) -> TrainConfig:
    t = cfg.train
    return TrainConfig(
        seed=cfg.run.seed,
        train_samples=t.train_samples,
        batch_size=t.batch_size,
        epochs=t.epochs,
        learning_rate=t.learning_rate,
        lr_decay=t.lr_decay,
        bs_antennas=t.bs_antennas,
        users=t.users,
        k_mean=t.k_mean,
        k_std=t.k_std,
        k_max=t.k_max,
        channel_model=t.channel_model,
        p_max=t.p_max,
        noise_power=t.noise_power,
        workers=cfg.run.workers,
    )


@experiment_command("train", "Train a PS precoding GNN without labels (or compare model arms).")
def train(cfg: ExperimentConfig, reports: ReportGenerator):
    if cfg.model.preset.strip().upper() != "PS":
        raise ConfigurationError(f"[model] preset: training supports PS, got {cfg.model.preset!r}")
    train_cfg = _train_config(cfg)
    widths = [cfg.model.hidden_width]

    if cfg.model.arms:
        seeds = cfg.train.seeds or [cfg.run.seed]
        per_run, per_arm = compare_arms(
            cfg.model.arms, seeds, train_cfg, test_samples=cfg.train.test_samples,
            widths=widths, layers=cfg.model.layer_count,
        )
        reports.emit_report(per_run, "arms", formats=_formats(cfg))
        reports.emit_report(per_arm, "arm_summary")
        reports.console_table("Attention placement", per_arm)
        return True, {"arms": per_arm}

    model = build_gnn_from_problem(
        preset_descriptors("PS"),
        widths,
        cfg.model.layer_count,
        attention=cfg.model.attention,
        pooling=cfg.model.pooling,
        seed=derive_seed(cfg.run.seed, "init"),
    )
    reports.emit_report(model.structure_rows(), "structure")
    result = train_unsupervised(model, train_cfg)
    reports.emit_report(result.to_rows(), "loss", formats=_formats(cfg))
    reports.written.append(save_checkpoint(model, Path(cfg.output.dir) / "model.ckpt", extra={"seed": cfg.run.seed}))

    users = train_cfg.users or int(round(train_cfg.k_mean))
    test = draw_ps_dataset(
        cfg.train.test_samples, train_cfg.bs_antennas, users, cfg.run.seed,
        train_cfg.channel_model, train_cfg.p_max, train_cfg.noise_power, label="holdout",
    )
    ratio = eval_se_ratio(model, test, seed=cfg.run.seed)
    summary = {"final_loss": result.loss_curve[-1], "test_users": users, **ratio.summary()}
    reports.console_table("Training", [summary])
    return True, summary


# ============================================================================
# eval-generalization
# ============================================================================


@experiment_command("eval-generalization", "Mean SE ratio of a trained model per user count.")
def eval_generalization(cfg: ExperimentConfig, reports: ReportGenerator):
    section = cfg.eval
    if not section.checkpoint:
        raise ConfigurationError("[eval] checkpoint is required")
    model = load_checkpoint(section.checkpoint)
    table = eval_size_generalization(
        model,
        section.train_sizes,
        section.test_sizes,
        bs_antennas=section.bs_antennas,
        samples=section.samples,
        seed=cfg.run.seed,
        channel_model=section.channel_model,
        p_max=section.p_max,
        noise_power=section.noise_power,
    )
    reports.emit_report(table.rows, "se_ratio", formats=_formats(cfg))
    reports.console_table("SE ratio vs K", table.rows)
    return True, {"rows": table.rows}


# ============================================================================
# count-flops
# ============================================================================


@experiment_command("count-flops", "Analytic FLOP scaling of the single- and all-attention models.")
def count_flops_command(cfg: ExperimentConfig, reports: ReportGenerator):
    section = cfg.flops
    model = build_gnn_from_problem(
        preset_descriptors(section.preset), [section.hidden_width], section.layer_count
    )
    dims = section.dims or [d.name for d in model.descriptors]
    variants = [("flops", model)]
    if section.all_attention:
        variants.append(("flops_all_attention", all_attention_variant(model)))

    slopes: Dict[str, Dict[str, float]] = {}
    for name, variant in variants:
        rows = []
        for dim in dims:
            sweep = flop_scaling(variant, section.sizes, dim, section.values)
            slopes.setdefault(name, {})[dim] = fit_loglog_slope(
                [r["size"] for r in sweep], [r["count"] for r in sweep]
            )
            rows.extend(sweep)
        reports.emit_report(rows, "flops", name=name, formats=_formats(cfg))
        pairwise = [r for dim in dims for r in flop_scaling(variant, section.sizes, dim, section.values, "pairwise")]
        reports.emit_report(pairwise, "flops", name=f"{name}_pairwise")

    slope_rows = [
        {"model": name, "dim": dim, "slope": slope}
        for name, by_dim in slopes.items()
        for dim, slope in by_dim.items()
    ]
    reports.console_table("Log-log slopes", slope_rows)
    base = count_flops(model, section.sizes)
    return True, {"slopes": slopes, "total": base.total, "pairwise": base.pairwise}


def run_experiment(subcommand: str, config_path: Union[str, Path], *args: str) -> int:
    """Run one subcommand in-process and return its exit status."""
    try:
        main.main([subcommand, "--config", str(config_path), *args], standalone_mode=False)
    except SystemExit as exc:
        return int(exc.code or 0)
    except click.ClickException as exc:
        exc.show()
        return exc.exit_code
    return EXIT_OK


if __name__ == "__main__":
    main()
