"""
``nepdf`` command-line entry point.

Commands: simulate, synth, convert, train, eval, benchmark, gradcheck
and config-template. Exit codes: 0 success, 1 runtime or data error,
2 usage or configuration error.
"""

import functools
import json
import logging
import os
import sys
from collections import Counter
from typing import Any, Callable, Dict, List, Optional

import click

from config.run_config import (
    RunConfig,
    cell_configs,
    default_config,
    from_dict,
    load_config,
    with_overrides,
)
from config.settings import settings
from pipelines.nepdf import PairSample
from pipelines.pair_files import convert_tuebingen, write_pairs
from pipelines.simgen import SemParams, SynthPairConfig, gen_synthetic_pairs, sem_dataset
from services.benchmark import (
    evaluate_models,
    history_frame,
    model_paths,
    run_benchmark,
    train_models,
    write_report,
)
from services.gradcheck import gradient_check
from services.model_store import load_model, save_model
from utils.errors import NepdfError
from utils.io import config_digest, output_lock, write_csv

logger = logging.getLogger(__name__)


def _output_dir(path: str) -> str:
    return os.path.dirname(os.path.abspath(path))


def handle_errors(func: Callable[..., Any]) -> Callable[..., Any]:
    """Map toolkit and OS errors to the documented exit codes."""

    @functools.wraps(func)
    def wrapper(*args: Any, **kwargs: Any) -> Any:
        try:
            return func(*args, **kwargs)
        except NepdfError as e:
            logger.error("%s: %s", type(e).__name__, e)
            click.echo(f"Error: {e}", err=True)
            sys.exit(e.exit_code)
        except OSError as e:
            logger.error("I/O error: %s", e)
            click.echo(f"Error: {e}", err=True)
            sys.exit(1)

    return wrapper


def _label_summary(pairs: List[PairSample]) -> str:
    counts = Counter(p.label for p in pairs)
    return ", ".join(f"label {label}: {counts.get(label, 0)}" for label in (1, -1, 0))


def _run_config(
    config_path: Optional[str], data_path: Optional[str], overrides: Dict[str, Any]
) -> RunConfig:
    """Defaults < config file < flags; ``--data`` replaces the configured source."""
    config = load_config(config_path) if config_path else default_config()
    if data_path:
        document = config.to_dict()
        for source in ("simulate", "synth"):
            document.pop(source, None)
        document["data"] = {"path": data_path}
        config = from_dict(document)
    return with_overrides(config, **overrides)


# ─── Group ───────────────────────────────────────────────────────────────────


@click.group()
@click.option("--verbose", "-v", is_flag=True, help="Log at DEBUG level.")
def cli(verbose: bool) -> None:
    """NEPDF causal discovery toolkit."""
    level = logging.DEBUG if verbose else getattr(logging, settings.log_level.upper(), logging.INFO)
    logging.basicConfig(
        level=level,
        format="%(asctime)s [%(levelname)s] %(name)s: %(message)s",
    )
    for problem in settings.validate():
        logger.warning("Settings: %s", problem)


# ─── Data Commands ───────────────────────────────────────────────────────────


@cli.command()
@click.option("--structure", type=click.Choice(["v", "chain", "reverse_v"]), default="v")
@click.option("--alpha", type=float, default=0.5, show_default=True)
@click.option("--beta", type=float, default=0.5, show_default=True)
@click.option("--gamma", type=float, default=0.0, show_default=True)
@click.option("--systems", type=click.IntRange(min=1), default=100, show_default=True)
@click.option("--steps", type=click.IntRange(min=2), default=1000, show_default=True)
@click.option("--burn-in", type=click.IntRange(min=0), default=0, show_default=True)
@click.option("--lag", type=click.IntRange(min=0), default=0, show_default=True)
@click.option("--seed", type=click.IntRange(min=0), default=0, show_default=True)
@click.option("--out", "out_path", type=click.Path(dir_okay=False), required=True)
@handle_errors
def simulate(
    structure: str,
    alpha: float,
    beta: float,
    gamma: float,
    systems: int,
    steps: int,
    burn_in: int,
    lag: int,
    seed: int,
    out_path: str,
) -> None:
    """Simulate structural equation systems into a pair dataset file."""
    params = SemParams(structure, alpha, beta, gamma, steps, seed, burn_in)
    params.validate()
    digest = config_digest({"command": "simulate", "systems": systems, "lag": lag, **vars(params)})
    with output_lock(_output_dir(out_path)):
        pairs = sem_dataset(params, systems, lag=lag)
        write_pairs(pairs, out_path, digest)
    click.echo(f"Wrote {len(pairs)} pairs to {out_path} ({_label_summary(pairs)})")


@cli.command()
@click.option("--n", "n_samples", type=click.IntRange(min=1), default=15000, show_default=True)
@click.option("--seed", type=click.IntRange(min=0), default=0, show_default=True)
@click.option("--m-range", type=(int, int), default=(100, 1000), show_default=True)
@click.option("--k-range", type=(int, int), default=(1, 5), show_default=True)
@click.option("--mechanism", type=click.Choice(["spline", "identity"]), default="spline")
@click.option("--homoscedastic", is_flag=True, help="Disable the heteroscedastic noise profile.")
@click.option("--out", "out_path", type=click.Path(dir_okay=False), required=True)
@handle_errors
def synth(
    n_samples: int,
    seed: int,
    m_range: tuple,
    k_range: tuple,
    mechanism: str,
    homoscedastic: bool,
    out_path: str,
) -> None:
    """Generate synthetic cause-effect pairs (all labeled -1)."""
    cfg = SynthPairConfig(
        n_samples=n_samples,
        m_range=tuple(m_range),
        k_range=tuple(k_range),
        seed=seed,
        mechanism=mechanism,
        heteroscedastic=not homoscedastic,
    )
    cfg.validate()
    digest = config_digest({"command": "synth", **vars(cfg)})
    with output_lock(_output_dir(out_path)):
        pairs = gen_synthetic_pairs(cfg)
        write_pairs(pairs, out_path, digest)
    click.echo(f"Wrote {len(pairs)} pairs to {out_path} ({_label_summary(pairs)})")


@cli.command()
@click.argument("source_dir", type=click.Path(exists=True, file_okay=False))
@click.option("--out", "out_path", type=click.Path(dir_okay=False), required=True)
@click.option("--pct-change", is_flag=True, help="Convert both series to percentage changes.")
@handle_errors
def convert(source_dir: str, out_path: str, pct_change: bool) -> None:
    """Convert a Tuebingen-style pair directory into a pair dataset file."""
    digest = config_digest(
        {"command": "convert", "source": os.path.basename(os.path.normpath(source_dir)),
         "pct_change": pct_change}
    )
    with output_lock(_output_dir(out_path)):
        pairs = convert_tuebingen(source_dir, pct_change=pct_change)
        write_pairs(pairs, out_path, digest)
    click.echo(f"Wrote {len(pairs)} pairs to {out_path} ({_label_summary(pairs)})")


# ─── Model Commands ──────────────────────────────────────────────────────────


@cli.command()
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--data", "data_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--mode", type=click.Choice(["multiclass", "chalearn", "direction", "dependence"]))
@click.option("--seed", type=click.IntRange(min=0))
@click.option("--epochs", type=click.IntRange(min=1))
@click.option("--model-out", type=click.Path(dir_okay=False), required=True)
@click.option("--history", "history_path", type=click.Path(dir_okay=False))
@handle_errors
def train(
    config_path: Optional[str],
    data_path: Optional[str],
    mode: Optional[str],
    seed: Optional[int],
    epochs: Optional[int],
    model_out: str,
    history_path: Optional[str],
) -> None:
    """Train the mode's classifier(s) on a whole dataset."""
    config = _run_config(
        config_path, data_path, {"eval.mode": mode, "seed": seed, "net.epochs": epochs}
    )
    history_path = history_path or f"{model_out}.history.csv"
    with output_lock(_output_dir(model_out)):
        results = train_models(config)
        paths = model_paths(model_out, config.eval.mode)
        for name, result in results.items():
            save_model(result.network, paths[name], config.digest())
        write_csv(history_frame(results), history_path, config.digest())
    for name, result in results.items():
        last = result.history[-1]
        click.echo(
            f"{name}: {len(result.history)} epochs, best epoch {result.best_epoch}, "
            f"final val_accuracy {last.val_accuracy:.4f} -> {paths[name]}"
        )


@cli.command(name="eval")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--data", "data_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--mode", type=click.Choice(["multiclass", "chalearn", "direction", "dependence"]))
@click.option("--model", "model_path", type=click.Path(dir_okay=False), required=True)
@click.option("--out", "out_dir", type=click.Path(file_okay=False), required=True)
@handle_errors
def eval_command(
    config_path: Optional[str],
    data_path: Optional[str],
    mode: Optional[str],
    model_path: str,
    out_dir: str,
) -> None:
    """Score a dataset with trained model(s); write report JSON and scores CSV."""
    config = _run_config(config_path, data_path, {"eval.mode": mode})
    paths = model_paths(model_path, config.eval.mode)
    models = {name: load_model(path) for name, path in paths.items()}
    with output_lock(out_dir):
        report = evaluate_models(config, models)
        report_path, scores_path = write_report(report, out_dir)
    fold = report.folds[0]
    click.echo(
        f"{report.metric}={fold.auroc} accuracy={fold.accuracy} "
        f"weighted_accuracy={fold.weighted_accuracy}"
    )
    for name, value in report.reference.items():
        click.echo(f"reference {name}={value}")
    click.echo(f"Wrote {report_path} and {scores_path}")


@cli.command()
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--out", "out_dir", type=click.Path(file_okay=False))
@click.option("--folds", type=click.IntRange(min=2))
@click.option("--seed", type=click.IntRange(min=0))
@handle_errors
def benchmark(
    config_path: str, out_dir: Optional[str], folds: Optional[int], seed: Optional[int]
) -> None:
    """Cross-validated benchmark; one report per simulation grid cell."""
    config = _run_config(
        config_path, None, {"output_dir": out_dir, "eval.folds": folds, "seed": seed}
    )
    with output_lock(config.output_dir):
        for name, cell in cell_configs(config):
            report = run_benchmark(cell)
            write_report(report, config.output_dir, stem=name)
            click.echo(
                f"{name}: mean {report.metric}={report.aggregate['mean_auroc']} "
                f"(std {report.aggregate['std_auroc']}), "
                f"baselines pearson={report.aggregate['mean_baseline_pearson']} "
                f"mi={report.aggregate['mean_baseline_mutual_information']} "
                f"bivariate_fit={report.aggregate['mean_baseline_bivariate_fit']}"
            )


@cli.command()
@click.option("--seed", type=click.IntRange(min=0), default=0, show_default=True)
@click.option("--corrupt-layer", type=int, default=None, hidden=True)
@handle_errors
def gradcheck(seed: int, corrupt_layer: Optional[int]) -> None:
    """Compare analytic gradients with central finite differences."""
    report = gradient_check(seed=seed, corrupt_layer=corrupt_layer)
    click.echo(f"{'parameter':<24} {'entries':>8} {'max rel error':>14}  status")
    for check in report.checks:
        status = "ok" if check.passed else "FAIL"
        click.echo(f"{check.name:<24} {check.entries:>8} {check.max_rel_error:>14.3e}  {status}")
    if not report.passed:
        click.echo(f"Gradient check failed for: {', '.join(report.failed)}", err=True)
        sys.exit(1)
    click.echo(f"All gradients within {report.tolerance:g}")


@cli.command(name="config-template")
def config_template() -> None:
    """Print the default run configuration as JSON."""
    click.echo(json.dumps(default_config().to_dict(), indent=2, sort_keys=True))


def main() -> None:
    cli()


if __name__ == "__main__":
    main()
