"""
Run configuration for training, evaluation and benchmarks.

A run is described by a JSON document with one data source section
(``data``, ``simulate`` or ``synth``) plus ``nepdf``, ``net`` and ``eval``
sections and top-level ``seed``/``output_dir``. Sections parse into frozen
dataclasses; their field lists are the accepted schema. Unknown keys,
wrong types and out-of-range values are rejected with ``ConfigError``
before any work starts.

Precedence: dataclass defaults < JSON file < command-line overrides.
"""

import json
import logging
import typing
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Any, Dict, List, Mapping, Optional, Tuple

from config.constants import (
    DEFAULT_BIVARIATE_DEGREE,
    DEFAULT_FOLDS,
    DEFAULT_K,
    DEFAULT_STEPS,
    EVAL_MODES,
    MIN_K,
    STRUCTURES,
)
from config.settings import settings
from services.network import check_architecture
from utils.errors import BadArchitecture, ConfigError
from utils.io import config_digest

logger = logging.getLogger(__name__)

SOURCES: Tuple[str, ...] = ("data", "simulate", "synth")


# ─── Sections ────────────────────────────────────────────────────────────────


@dataclass(frozen=True)
class DataSection:
    """Pair dataset file (``id,label,weight,x,y`` CSV)."""

    path: str = ""


@dataclass(frozen=True)
class SimulateSection:
    """Structural equation simulation source.

    ``grid`` lists parameter overrides (e.g. ``{"alpha": 0.1, "beta": 0.1}``);
    a benchmark produces one report per grid cell, or a single report when
    the grid is empty.
    """

    structure: str = "v"
    alpha: float = 0.5
    beta: float = 0.5
    gamma: float = 0.0
    systems: int = 100
    steps: int = DEFAULT_STEPS
    burn_in: int = 0
    lag: int = 0
    grid: Tuple[Dict[str, float], ...] = ()


@dataclass(frozen=True)
class SynthSection:
    """Synthetic cause-effect pair source."""

    n_samples: int = 1000
    m_range: Tuple[int, int] = (100, 1000)
    k_range: Tuple[int, int] = (1, 5)
    mean_range: Tuple[float, float] = (0.0, 5.0)
    std_range: Tuple[float, float] = (0.0, 5.0)
    noise_variance_range: Tuple[float, float] = (0.0, 5.0)
    mechanism: str = "spline"
    heteroscedastic: bool = True


@dataclass(frozen=True)
class NepdfSection:
    """NEPDF construction. ``augment`` None means automatic: on for
    file and synthetic sources, off for simulations (which already emit
    both orientations of every pair)."""

    k: int = DEFAULT_K
    log_space: bool = False
    log_transform: bool = False
    augment: Optional[bool] = None


@dataclass(frozen=True)
class NetSection:
    arch: Optional[Tuple[Dict[str, Any], ...]] = None
    dtype: str = "float32"
    learning_rate: float = 0.01
    momentum: float = 0.9
    batch_size: int = 32
    epochs: int = 30
    validation_fraction: float = 0.1
    early_stop_patience: int = 5


@dataclass(frozen=True)
class EvalSection:
    folds: int = DEFAULT_FOLDS
    mode: str = "multiclass"
    bivariate_degree: int = DEFAULT_BIVARIATE_DEGREE
    baselines: bool = True


@dataclass(frozen=True)
class RunConfig:
    """Complete run description. Exactly one of data/simulate/synth is set."""

    data: Optional[DataSection] = None
    simulate: Optional[SimulateSection] = None
    synth: Optional[SynthSection] = None
    nepdf: NepdfSection = field(default_factory=NepdfSection)
    net: NetSection = field(default_factory=NetSection)
    eval: EvalSection = field(default_factory=EvalSection)
    seed: int = 0
    output_dir: str = field(default_factory=lambda: settings.output_dir)

    @property
    def source(self) -> str:
        """Name of the configured data source."""
        for name in SOURCES:
            if getattr(self, name) is not None:
                return name
        return ""

    @property
    def augment(self) -> bool:
        """Whether transpose twins are added to the dataset."""
        if self.nepdf.augment is not None:
            return self.nepdf.augment
        return self.source != "simulate"

    def validate(self) -> list[str]:
        """Validate value ranges. Returns list of errors."""
        errors = []
        chosen = [name for name in SOURCES if getattr(self, name) is not None]
        if len(chosen) != 1:
            errors.append(
                f"Exactly one data source ({', '.join(SOURCES)}) is required, got {chosen or 'none'}"
            )
        if self.data is not None and not self.data.path:
            errors.append("data.path is required")
        if self.simulate is not None:
            sim = self.simulate
            if sim.structure not in STRUCTURES:
                errors.append(f"simulate.structure must be one of {', '.join(STRUCTURES)}")
            if sim.systems < 1 or sim.steps < 2:
                errors.append("simulate.systems must be >= 1 and simulate.steps >= 2")
            if sim.burn_in < 0 or not 0 <= sim.lag < sim.steps:
                errors.append("simulate.burn_in must be >= 0 and simulate.lag in [0, steps)")
            for cell in sim.grid:
                unknown = set(cell) - {"alpha", "beta", "gamma"}
                if unknown:
                    errors.append(
                        f"simulate.grid cells may set alpha/beta/gamma only, got {sorted(unknown)}"
                    )
                numeric = (isinstance(v, (int, float)) and not isinstance(v, bool) for v in cell.values())
                if not all(numeric):
                    errors.append("simulate.grid values must be numbers")
        if self.synth is not None and self.synth.n_samples < 1:
            errors.append("synth.n_samples must be >= 1")
        if self.nepdf.k < MIN_K:
            errors.append(f"nepdf.k must be >= {MIN_K}")
        else:
            try:
                check_architecture(self.nepdf.k, self.net.arch)
            except BadArchitecture as e:
                errors.append(f"net.arch: {e}")
        if self.net.dtype not in ("float32", "float64"):
            errors.append("net.dtype must be float32 or float64")
        if self.eval.mode not in EVAL_MODES:
            errors.append(f"eval.mode must be one of {', '.join(EVAL_MODES)}")
        if self.eval.folds < 2:
            errors.append("eval.folds must be >= 2")
        if self.eval.bivariate_degree < 1:
            errors.append("eval.bivariate_degree must be >= 1")
        if self.seed < 0:
            errors.append("seed must be >= 0")
        return errors

    def to_dict(self) -> Dict[str, Any]:
        """JSON-ready form; unset sources are omitted."""
        data = asdict(self)
        for name in SOURCES:
            if data[name] is None:
                del data[name]
        return _jsonable(data)

    def digest(self) -> str:
        """Digest of everything that affects results (output_dir excluded)."""
        payload = self.to_dict()
        payload.pop("output_dir", None)
        return config_digest(payload)


# ─── Parsing ─────────────────────────────────────────────────────────────────


def _jsonable(value: Any) -> Any:
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    return value


def _coerce(path: str, value: Any, hint: Any) -> Any:
    origin = typing.get_origin(hint)
    args = typing.get_args(hint)

    if origin is typing.Union:
        if value is None:
            return None
        inner = [a for a in args if a is not type(None)][0]
        return _coerce(path, value, inner)
    if hint is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"{path} must be a boolean")
        return value
    if hint is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{path} must be an integer")
        return value
    if hint is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{path} must be a number")
        return float(value)
    if hint is str:
        if not isinstance(value, str):
            raise ConfigError(f"{path} must be a string")
        return value
    if origin is tuple:
        if not isinstance(value, list):
            raise ConfigError(f"{path} must be a list")
        if len(args) == 2 and args[1] is Ellipsis:
            return tuple(_coerce(f"{path}[{i}]", v, args[0]) for i, v in enumerate(value))
        if len(value) != len(args):
            raise ConfigError(f"{path} must have {len(args)} elements")
        return tuple(_coerce(f"{path}[{i}]", v, a) for i, (v, a) in enumerate(zip(value, args)))
    if origin is dict:
        if not isinstance(value, dict):
            raise ConfigError(f"{path} must be an object")
        return dict(value)
    if isinstance(hint, type) and hasattr(hint, "__dataclass_fields__"):
        return _section(hint, value, path)
    raise ConfigError(f"{path} has an unsupported type")


def _section(cls: type, data: Any, path: str) -> Any:
    if not isinstance(data, dict):
        raise ConfigError(f"{path or 'config'} must be an object")
    known = {f.name: f for f in fields(cls)}
    unknown = sorted(set(data) - set(known))
    if unknown:
        raise ConfigError(f"Unknown key(s) in {path or 'config'}: {', '.join(unknown)}")
    hints = typing.get_type_hints(cls)
    values = {}
    for name, value in data.items():
        values[name] = _coerce(f"{path}.{name}" if path else name, value, hints[name])
    return cls(**values)


def from_dict(data: Mapping[str, Any]) -> RunConfig:
    """Parse and validate a RunConfig document.

    Raises:
        ConfigError: On unknown keys, wrong types or invalid values.
    """
    config = _section(RunConfig, dict(data), "")
    errors = config.validate()
    if errors:
        raise ConfigError("; ".join(errors))
    return config


def load_config(path: str) -> RunConfig:
    """Read a RunConfig JSON file.

    Raises:
        ConfigError: If the file is not valid JSON or fails validation.
        OSError: If the file cannot be read.
    """
    with open(path, "r", encoding="utf-8") as f:
        try:
            data = json.load(f)
        except json.JSONDecodeError as e:
            raise ConfigError(f"{path} is not valid JSON: {e}") from e
    logger.info("Loaded run configuration from %s", path)
    return from_dict(data)


def with_overrides(config: RunConfig, **overrides: Any) -> RunConfig:
    """Apply dotted-path overrides such as ``{"eval.folds": 3}``; None values are ignored.

    Raises:
        ConfigError: If a path is unknown or the result fails validation.
    """
    data = config.to_dict()
    for dotted, value in overrides.items():
        if value is None:
            continue
        target = data
        *parents, leaf = dotted.split(".")
        for part in parents:
            target = target.setdefault(part, {})
        target[leaf] = _jsonable(value)
    return from_dict(data)


def default_config() -> RunConfig:
    """Defaults with a simulation source, as printed by ``config-template``."""
    return RunConfig(simulate=SimulateSection())


def cell_configs(config: RunConfig) -> List[Tuple[str, RunConfig]]:
    """Expand a simulation grid into (cell name, config) pairs.

    Without a grid (or for non-simulation sources) the result is the
    single cell ``("run", config)``.
    """
    sim = config.simulate
    if sim is None or not sim.grid:
        return [("run", config)]
    cells = []
    for cell in sim.grid:
        name = "_".join(f"{k}{cell[k]:g}" for k in sorted(cell))
        cells.append((name, replace(config, simulate=replace(sim, grid=(), **cell))))
    return cells
