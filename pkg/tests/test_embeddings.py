import logging

import numpy as np
import pytest

from core.errors import DimensionError, EmbeddingFormatError
from core.rng import RngStreams
from dialogue.embeddings import (EmbeddingTable, init_input_embeddings, load_embeddings,
                                 semantic_distance, sentence_embedding)
from dialogue.vocabulary import Vocabulary


def _write(tmp_path, text, name="vecs.txt"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return str(path)


def test_load_with_and_without_header(tmp_path):
    plain = load_embeddings(_write(tmp_path, "a 1 2\nb 3 4\n"))
    headed = load_embeddings(_write(tmp_path, "2 2\na 1 2\nb 3 4\n", "headed.txt"))
    assert plain.dim == headed.dim == 2
    np.testing.assert_array_equal(plain.vector("b"), headed.vector("b"))


def test_vocabulary_filter(tmp_path):
    table = load_embeddings(_write(tmp_path, "a 1 2\nb 3 4\nc 5 6\n"), vocabulary_filter={"a", "c"})
    assert len(table) == 2 and "b" not in table


def test_ragged_line_cites_line_number(tmp_path):
    with pytest.raises(EmbeddingFormatError) as info:
        load_embeddings(_write(tmp_path, "a 1 2\nb 3 4\nc 5\n"))
    assert info.value.line_number == 3


def test_unparsable_value(tmp_path):
    with pytest.raises(EmbeddingFormatError) as info:
        load_embeddings(_write(tmp_path, "a 1 x\n"))
    assert info.value.line_number == 1


def test_table_is_read_only(tiny_table):
    with pytest.raises(ValueError):
        tiny_table.matrix[0, 0] = 5.0


def test_sentence_embedding_ignores_specials_and_counts_oov(tiny_table):
    result = sentence_embedding(["a", "b", "zzz", "</s>"], tiny_table)
    np.testing.assert_allclose(result.vector, [0.5, 0.5])
    assert (result.covered_count, result.total_count) == (2, 4)


def test_all_oov_is_zero_vector(tiny_table):
    result = sentence_embedding(["nope", "never"], tiny_table)
    np.testing.assert_array_equal(result.vector, [0.0, 0.0])
    assert (result.covered_count, result.total_count) == (0, 2)
    assert semantic_distance(["nope"], ["never"], tiny_table) == 0.0


def test_distance_example(tiny_table):
    # mean(a, b) = (.5, .5); c = (1, 1)
    assert semantic_distance(["a", "b"], ["c"], tiny_table) == pytest.approx(np.sqrt(0.5))


def test_distance_properties_on_random_pairs():
    rng = np.random.default_rng(0)
    words = [f"w{i}" for i in range(30)]
    table = EmbeddingTable(10, words, rng.standard_normal((30, 10)))

    def sentence():
        return [words[i] for i in rng.integers(0, 30, size=rng.integers(1, 8))]

    for _ in range(1000):
        x, y, z = sentence(), sentence(), sentence()
        d_xy = semantic_distance(x, y, table)
        assert d_xy >= 0.0
        assert d_xy == pytest.approx(semantic_distance(y, x, table), abs=1e-12)
        assert d_xy <= semantic_distance(x, z, table) + semantic_distance(z, y, table) + 1e-12
        shuffled = list(rng.permutation(x))
        assert semantic_distance(x, shuffled, table) == pytest.approx(0.0, abs=1e-12)
        assert semantic_distance(x, x + x, table) == pytest.approx(0.0, abs=1e-12)


def test_init_copies_rows_when_dims_agree(tiny_table):
    vocab = Vocabulary(["a", "b", "missing"])
    base = np.full((len(vocab), 2), 7.0)
    matrix, report = init_input_embeddings(vocab, tiny_table, 2, RngStreams(0), base=base)
    np.testing.assert_array_equal(matrix[vocab.token_to_id["a"]], [1.0, 0.0])
    np.testing.assert_array_equal(matrix[vocab.token_to_id["missing"]], [7.0, 7.0])
    assert report.covered == 2 and not report.projected
    assert base[5, 0] == 7.0


def test_init_projects_when_dims_differ(tiny_table):
    vocab = Vocabulary(["a", "b"])
    first, report = init_input_embeddings(vocab, tiny_table, 6, RngStreams(4))
    second, _ = init_input_embeddings(vocab, tiny_table, 6, RngStreams(4))
    assert first.shape == (len(vocab), 6) and report.projected
    np.testing.assert_array_equal(first, second)
    # the projection is linear: c = a + b, so rows add up
    c_row = init_input_embeddings(Vocabulary(["c"]), tiny_table, 6, RngStreams(4))[0][5]
    np.testing.assert_allclose(first[5] + first[6], c_row)


def test_specials_count_toward_the_total(tiny_table):
    result = sentence_embedding(["<s>", "a", "<sep>", "zzz", "</s>"], tiny_table)
    np.testing.assert_allclose(result.vector, [1.0, 0.0])
    assert (result.covered_count, result.total_count) == (1, 5)


def test_all_oov_average_is_a_warning(tiny_table, caplog):
    with caplog.at_level(logging.WARNING, logger="dialogue.embeddings"):
        sentence_embedding(["nope", "</s>"], tiny_table)
    assert [r.levelno for r in caplog.records] == [logging.WARNING]

    caplog.clear()
    with caplog.at_level(logging.WARNING, logger="dialogue.embeddings"):
        assert sentence_embedding(["</s>"], tiny_table).total_count == 1
    assert not caplog.records


def test_table_shape_mismatch_is_a_dimension_error():
    with pytest.raises(DimensionError):
        EmbeddingTable(2, ["a", "b"], np.zeros((3, 2)))
