import json

import numpy as np
import pytest

from core.config import TrainingConfig
from core.errors import ContractError, IncompatibleCheckpointError
from core.run_manager import RunManager, load_checkpoint, validate_checkpoint_data
from dialogue.vocabulary import Vocabulary
from models.lstm_seq2seq import LstmSeq2Seq


@pytest.fixture
def saved(tmp_path, tiny_vocab):
    model = LstmSeq2Seq.initialize(len(tiny_vocab), 3, 4, np.random.default_rng(0))
    manager = RunManager(str(tmp_path))
    config = TrainingConfig(embedding_size=3, hidden_size=4)
    path = manager.save_checkpoint(manager.run_dir(1) / "checkpoint", model, tiny_vocab, config, step=12)
    return manager, model, path


def test_checkpoint_round_trip(saved, tiny_vocab):
    _, model, path = saved
    assert path.name == "checkpoint.json"
    loaded, config, metadata = load_checkpoint(str(path), tiny_vocab)
    assert metadata["step"] == 12
    assert (config.embedding_size, config.hidden_size) == (3, 4)
    for name, value in model.to_state_dict().items():
        np.testing.assert_array_equal(loaded.to_state_dict()[name], value)


def test_checkpoint_bytes_are_reproducible(saved, tiny_vocab):
    manager, model, path = saved
    again = manager.save_checkpoint(path.parent / "again.json", model, tiny_vocab,
                                    TrainingConfig(embedding_size=3, hidden_size=4), step=12)
    assert again.read_bytes() == path.read_bytes()


def test_vocabulary_mismatch(saved):
    _, _, path = saved
    with pytest.raises(IncompatibleCheckpointError):
        load_checkpoint(str(path), Vocabulary(["a", "b", "d"]))


def test_state_dict_override(saved, tiny_vocab, tmp_path):
    manager, model, _ = saved
    zeros = {name: np.zeros_like(value) for name, value in model.to_state_dict().items()}
    path = manager.save_checkpoint(tmp_path / "zeros.json", model, tiny_vocab, TrainingConfig(), 3,
                                   state_dict=zeros)
    loaded, _, _ = load_checkpoint(str(path))
    assert not any(value.any() for value in loaded.to_state_dict().values())


def test_malformed_checkpoint(saved):
    _, _, path = saved
    data = json.loads(path.read_text())
    del data["metadata"]["vocab_hash"]
    with pytest.raises(ContractError):
        validate_checkpoint_data(data)
    data = json.loads(path.read_text())
    data["parameters"]["output_bias"]["values"].pop()
    with pytest.raises(ContractError):
        validate_checkpoint_data(data)


def test_manifest_lists_relative_paths_with_digests(saved):
    manager, _, path = saved
    config_path = manager.save_config_snapshot(TrainingConfig())
    manifest = json.loads(manager.write_manifest([path, config_path], {"seeds": [1]}).read_text())
    assert sorted(manifest["artifacts"]) == ["config.txt", "seed_1/checkpoint.json"]
    assert all(len(digest) == 64 for digest in manifest["artifacts"].values())
    assert manifest["seeds"] == [1]
