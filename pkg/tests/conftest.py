import pytest

from dialogue.embeddings import EmbeddingTable
from dialogue.vocabulary import Vocabulary
from helpers import write_corpus


@pytest.fixture
def tiny_vocab():
    # 5 reserved ids + a, b, c -> |V| = 8
    return Vocabulary(["a", "b", "c"])


@pytest.fixture
def tiny_table():
    return EmbeddingTable.from_dict({
        "a": [1.0, 0.0],
        "b": [0.0, 1.0],
        "c": [1.0, 1.0],
        "hello": [0.5, -0.5],
    })


@pytest.fixture
def corpus_writer(tmp_path):
    def write(dialogues, name="corpus.jsonl"):
        return write_corpus(tmp_path / name, dialogues)
    return write
