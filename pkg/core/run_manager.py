"""
Run Manager - Handles run directories, checkpoint saving/loading, and manifests
"""

import hashlib
import json
import logging
from pathlib import Path
from typing import Any, Dict, Iterable, Optional, Tuple

import numpy as np

from core.config import TrainingConfig, apply_overrides, save_config
from core.errors import ContractError, IncompatibleCheckpointError
from dialogue.vocabulary import Vocabulary
from models.base_model import Seq2SeqModel
from models.lstm_seq2seq import get_model_class

CHECKPOINT_VERSION = "1.0"


def _to_json(data: Dict[str, Any]) -> str:
    return json.dumps(data, indent=1, sort_keys=True, ensure_ascii=False) + "\n"


def _file_digest(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


class RunManager:
    """
    Manages the files of one output directory: per-seed run folders, checkpoints,
    the configuration snapshot and the manifest listing every artifact.

    Everything is written with sorted keys and no timestamps so identical runs
    produce identical bytes.
    """

    def __init__(self, out_dir: str):
        self.out_dir = Path(out_dir)
        self.logger = logging.getLogger(self.__class__.__name__)

        # Checkpoint settings
        self.checkpoint_file_extension = ".json"
        self.manifest_name = "manifest.json"
        self.config_snapshot_name = "config.txt"

    def prepare(self) -> Path:
        """Create the output directory."""
        self.out_dir.mkdir(parents=True, exist_ok=True)
        return self.out_dir

    def run_dir(self, seed: int) -> Path:
        path = self.out_dir / f"seed_{seed}"
        path.mkdir(parents=True, exist_ok=True)
        return path

    def save_config_snapshot(self, config: TrainingConfig) -> Path:
        """Copy the effective configuration into the output directory."""
        path = self.prepare() / self.config_snapshot_name
        save_config(config, str(path))
        self.logger.info(f"Configuration snapshot saved: {path}")
        return path

    def save_checkpoint(self, path: Path, model: Seq2SeqModel, vocab: Vocabulary,
                        config: TrainingConfig, step: int,
                        state_dict: Optional[Dict[str, np.ndarray]] = None) -> Path:
        """
        Save model parameters with the metadata needed to rebuild the model.

        state_dict overrides the model's current values (used for last-good snapshots).
        """
        path = Path(path)
        if not path.name.endswith(self.checkpoint_file_extension):
            path = path.with_name(path.name + self.checkpoint_file_extension)
        path.parent.mkdir(parents=True, exist_ok=True)

        values = state_dict if state_dict is not None else model.to_state_dict()
        checkpoint_data = {
            "metadata": {
                "version": CHECKPOINT_VERSION,
                "step": step,
                "vocab_hash": vocab.content_hash(),
            },
            "model": {"kind": config.model, **model.describe()},
            "config": config.to_dict(),
            "parameters": {
                name: {"shape": list(value.shape), "values": np.asarray(value).reshape(-1).tolist()}
                for name, value in values.items()
            },
        }
        path.write_text(_to_json(checkpoint_data), encoding="utf-8")
        self.logger.info(f"Checkpoint saved: {path} (step {step})")
        return path

    def write_manifest(self, artifacts: Iterable[Path], extra: Optional[Dict[str, Any]] = None) -> Path:
        """List every artifact with its SHA-256, relative to the output directory."""
        entries = {}
        for artifact in sorted({Path(a) for a in artifacts}):
            entries[artifact.relative_to(self.out_dir).as_posix()] = _file_digest(artifact)
        manifest = {"artifacts": entries, **(extra or {})}
        path = self.prepare() / self.manifest_name
        path.write_text(_to_json(manifest), encoding="utf-8")
        self.logger.info(f"Manifest written: {path} ({len(entries)} artifacts)")
        return path


def validate_checkpoint_data(checkpoint_data: Dict[str, Any]):
    """Validate the checkpoint structure; raise ContractError naming the first problem."""
    for field in ("metadata", "model", "config", "parameters"):
        if field not in checkpoint_data:
            raise ContractError(f"checkpoint is missing required field: {field}")
    if "vocab_hash" not in checkpoint_data["metadata"]:
        raise ContractError("checkpoint metadata has no vocab_hash")
    if not isinstance(checkpoint_data["parameters"], dict):
        raise ContractError("checkpoint parameters must be a mapping")
    for name, entry in checkpoint_data["parameters"].items():
        if "shape" not in entry or "values" not in entry:
            raise ContractError(f"parameter {name} needs shape and values")
        if int(np.prod(entry["shape"])) != len(entry["values"]):
            raise ContractError(f"parameter {name}: {len(entry['values'])} values for shape {entry['shape']}")


def load_checkpoint(path: str, vocab: Optional[Vocabulary] = None) -> Tuple[Seq2SeqModel, TrainingConfig, Dict[str, Any]]:
    """
    Load a checkpoint and rebuild its model.

    When a vocabulary is given its content hash must match the one the model was
    trained with.
    """
    logger = logging.getLogger(__name__)
    with open(path, "r", encoding="utf-8") as f:
        checkpoint_data = json.load(f)
    validate_checkpoint_data(checkpoint_data)

    expected_hash = checkpoint_data["metadata"]["vocab_hash"]
    if vocab is not None and vocab.content_hash() != expected_hash:
        raise IncompatibleCheckpointError(
            f"vocabulary hash {vocab.content_hash()[:12]} does not match checkpoint {expected_hash[:12]}")

    info = checkpoint_data["model"]
    model_class = get_model_class(info["kind"])
    if model_class is None:
        raise ContractError(f"no model registered for kind: {info['kind']}")
    values = {
        name: np.asarray(entry["values"], dtype=np.float64).reshape(entry["shape"])
        for name, entry in checkpoint_data["parameters"].items()
    }
    model = model_class(info["vocab_size"], info["embedding_size"], info["hidden_size"], values)
    config = apply_overrides(TrainingConfig(), checkpoint_data["config"])

    logger.info(f"Checkpoint loaded: {path} (step {checkpoint_data['metadata']['step']})")
    return model, config, checkpoint_data["metadata"]
