from collections import defaultdict

from dialogue.corpus import build_pairs, load_corpus
from dialogue.synthetic import (generate_dialogues, make_synthetic, synthetic_embeddings,
                                synthetic_tokens)
from dialogue.embeddings import load_embeddings, semantic_distance


def test_generation_is_deterministic():
    assert generate_dialogues(30, seed=3) == generate_dialogues(30, seed=3)
    assert generate_dialogues(30, seed=3) != generate_dialogues(30, seed=4)


def test_dialogues_alternate_and_are_numbered():
    dialogues = generate_dialogues(5)
    assert [d["dialogue_id"] for d in dialogues] == [f"synth-0000{i}" for i in range(5)]
    for dialogue in dialogues:
        speakers = [turn["speaker"] for turn in dialogue["turns"]]
        assert speakers == ["user", "agent"] * 4


def test_contexts_have_several_valid_responses(tmp_path):
    corpus_path, _ = make_synthetic(str(tmp_path), dialogues=300, dim=8)
    dialogues, report = load_corpus(str(corpus_path))
    assert not report.alternation_violations
    responses = defaultdict(set)
    for pair in build_pairs(dialogues):
        responses[tuple(pair.context_tokens[:8])].add(tuple(pair.target_tokens))
    assert max(len(targets) for targets in responses.values()) >= 2


def test_every_token_has_a_vector(tmp_path):
    _, vectors_path = make_synthetic(str(tmp_path), dialogues=50, dim=6)
    table = load_embeddings(str(vectors_path))
    assert table.dim == 6
    dialogues, _ = load_corpus(str(tmp_path / "corpus.jsonl"))
    corpus_tokens = {tok for d in dialogues for turn in d.turns for tok in turn.tokens}
    assert corpus_tokens <= set(table.index)
    assert set(synthetic_tokens()) == set(table.index)


def test_synonyms_are_closer_than_unrelated_words():
    table = synthetic_embeddings(dim=50)
    assert semantic_distance(["sure"], ["okay"], table) < semantic_distance(["sure"], ["paris"], table)
    assert semantic_distance(["paris"], ["rome"], table) < semantic_distance(["paris"], ["dollars"], table)
