"""
Config - Training configuration and its flat key=value file format
"""

import dataclasses
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Tuple

from core.errors import ConfigError

logger = logging.getLogger(__name__)

INIT_MODES = ("random", "from-table")
MODEL_KINDS = ("lstm",)


@dataclass
class TrainingConfig:
    """All knobs of a training run. Defaults follow the reference hyperparameters."""

    alpha: float = 0.1
    learning_rate: float = 4e-3
    hidden_size: int = 128
    embedding_size: int = 128
    batch_size: int = 32
    epochs: int = 10
    seeds: List[int] = field(default_factory=lambda: [1, 2, 3, 4, 5])
    p_drop: float = 0.0
    baseline_window: int = 20
    eval_every: int = 100
    embedding_file: Optional[str] = None
    init_mode: str = "random"
    max_len: int = 30
    context_cap: int = 256
    min_count: int = 1
    corpus_file: Optional[str] = None
    out_dir: str = "runs/default"
    valid_ratio: float = 0.1
    split_file: Optional[str] = None
    workers: int = 1
    beam_width: int = 5
    eval_max_pairs: int = 0
    divergence_window: int = 100
    divergence_factor: float = 10.0
    max_masked_mass: float = 0.5
    log_every: int = 10
    model: str = "lstm"

    def validate(self, require_embeddings: bool = False) -> "TrainingConfig":
        """Check every field and raise one ConfigError listing all offending keys."""
        problems: List[Tuple[str, str]] = []

        def check(key: str, ok: bool, reason: str):
            if not ok:
                problems.append((key, reason))

        check("alpha", math.isfinite(self.alpha) and self.alpha >= 0, "alpha must be >= 0")
        check("learning_rate", math.isfinite(self.learning_rate) and self.learning_rate > 0,
              "learning_rate must be > 0")
        for key in ("hidden_size", "embedding_size", "batch_size", "epochs", "baseline_window",
                    "eval_every", "max_len", "context_cap", "min_count", "workers",
                    "beam_width", "divergence_window", "log_every"):
            check(key, getattr(self, key) >= 1, f"{key} must be >= 1")
        check("eval_max_pairs", self.eval_max_pairs >= 0, "eval_max_pairs must be >= 0")
        check("seeds", len(self.seeds) >= 1, "at least one seed is required")
        check("p_drop", 0.0 <= self.p_drop < 1.0, "p_drop must be in [0, 1)")
        check("valid_ratio", 0.0 < self.valid_ratio < 1.0, "valid_ratio must be in (0, 1)")
        check("divergence_factor", self.divergence_factor > 1.0, "divergence_factor must be > 1")
        check("max_masked_mass", 0.0 < self.max_masked_mass <= 1.0, "max_masked_mass must be in (0, 1]")
        check("init_mode", self.init_mode in INIT_MODES, f"init_mode must be one of {INIT_MODES}")
        check("model", self.model in MODEL_KINDS, f"model must be one of {MODEL_KINDS}")
        needs_table = require_embeddings and (self.alpha > 0 or self.init_mode == "from-table")
        check("embedding_file", not needs_table or bool(self.embedding_file),
              "embedding_file is required when alpha > 0 or init_mode=from-table")

        if problems:
            raise ConfigError(problems)
        return self

    def to_dict(self) -> Dict[str, Any]:
        return dataclasses.asdict(self)

    def replace(self, **changes) -> "TrainingConfig":
        return dataclasses.replace(self, **changes)


_FIELDS = {f.name: f for f in dataclasses.fields(TrainingConfig)}
_OPTIONAL_STR = {"embedding_file", "corpus_file", "split_file"}


def config_keys() -> List[str]:
    """Get the list of every configuration key."""
    return list(_FIELDS.keys())


def _format_value(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, list):
        return ",".join(str(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _parse_value(key: str, raw: Any) -> Any:
    """Convert a raw string (or already typed value) to the field's type."""
    default = getattr(TrainingConfig(), key)
    if key in _OPTIONAL_STR:
        if raw is None:
            return None
        raw = str(raw).strip()
        return raw or None
    if key == "seeds":
        if isinstance(raw, (list, tuple)):
            return [int(v) for v in raw]
        return [int(part) for part in str(raw).split(",") if part.strip()]
    if isinstance(default, bool):
        return str(raw).strip().lower() in ("1", "true", "yes", "on")
    if isinstance(default, int):
        return int(raw)
    if isinstance(default, float):
        return float(raw)
    return str(raw).strip()


def apply_overrides(config: TrainingConfig, overrides: Mapping[str, Any]) -> TrainingConfig:
    """Return a copy of config with overrides applied; unknown or unparsable keys are errors."""
    problems: List[Tuple[str, str]] = []
    changes: Dict[str, Any] = {}
    for raw_key, raw_value in overrides.items():
        key = raw_key.replace("-", "_")
        if key not in _FIELDS:
            problems.append((raw_key, "unknown key"))
            continue
        try:
            changes[key] = _parse_value(key, raw_value)
        except (TypeError, ValueError) as e:
            problems.append((raw_key, f"cannot parse {raw_value!r}: {e}"))
    if problems:
        raise ConfigError(problems)
    return dataclasses.replace(config, **changes)


def load_config(path: str) -> TrainingConfig:
    """Load a flat key=value file. Later keys override earlier ones."""
    overrides: Dict[str, str] = {}
    problems: List[Tuple[str, str]] = []
    text = Path(path).read_text(encoding="utf-8")
    for number, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            problems.append((f"line {number}", "expected key=value"))
            continue
        key, value = stripped.split("=", 1)
        overrides[key.strip()] = value.strip()
    if problems:
        raise ConfigError(problems)
    config = apply_overrides(TrainingConfig(), overrides)
    logger.info(f"Configuration loaded: {path}")
    return config


def dump_config(config: TrainingConfig) -> str:
    """Serialize a configuration as key=value lines in field order."""
    lines = [f"{key}={_format_value(value)}" for key, value in config.to_dict().items()]
    return "\n".join(lines) + "\n"


def save_config(config: TrainingConfig, path: str):
    """Write a configuration snapshot."""
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(dump_config(config), encoding="utf-8")
