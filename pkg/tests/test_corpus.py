import random

import pytest

from core.errors import CorpusParseError, EmptyCorpusError
from dialogue.corpus import (assemble_context, bigram_stats, build_pairs, corpus_bigram_report,
                             load_corpus, load_pairs, save_pairs, split_dialogues, split_on_sep,
                             tokenize)
from dialogue.vocabulary import EOS_TOKEN, SEP_TOKEN


def test_tokenize_examples():
    assert tokenize("Would you like to travel to Paris ?") == [
        "would", "you", "like", "to", "travel", "to", "paris", "?"]
    assert tokenize("") == []
    assert tokenize("don't") == ["don", "'", "t"]
    assert tokenize("  Hello,\tWORLD!  ") == ["hello", ",", "world", "!"]


def test_one_exchange_gives_one_pair(corpus_writer):
    path = corpus_writer([("d1", [("user", "hi there"), ("agent", "hello !")])])
    dialogues, report = load_corpus(path)
    assert report.dialogue_count == 1 and report.turn_count == 2
    pairs = build_pairs(dialogues)
    assert len(pairs) == 1
    assert pairs[0].context_tokens == ["hi", "there"]
    assert pairs[0].target_tokens == ["hello", "!", EOS_TOKEN]


def test_contexts_grow_with_each_agent_turn(corpus_writer):
    turns = [("user", "a"), ("agent", "b"), ("user", "c"), ("agent", "d"), ("user", "e"), ("agent", "f")]
    dialogues, _ = load_corpus(corpus_writer([("d1", turns)]))
    pairs = build_pairs(dialogues)
    assert len(pairs) == 3
    assert [p.context_tokens for p in pairs] == [
        ["a"],
        ["a", SEP_TOKEN, "b", SEP_TOKEN, "c"],
        ["a", SEP_TOKEN, "b", SEP_TOKEN, "c", SEP_TOKEN, "d", SEP_TOKEN, "e"],
    ]
    for pair in pairs:
        assert pair.target_tokens.count(EOS_TOKEN) == 1 and pair.target_tokens[-1] == EOS_TOKEN


def test_bad_json_cites_line(tmp_path):
    path = tmp_path / "bad.jsonl"
    good = '{"dialogue_id": "x", "turns": [{"speaker": "user", "text": "hi"}]}\n'
    path.write_text(good * 6 + "{not json\n", encoding="utf-8")
    with pytest.raises(CorpusParseError) as info:
        load_corpus(str(path))
    assert info.value.line_number == 7


def test_empty_file(tmp_path):
    path = tmp_path / "empty.jsonl"
    path.write_text("\n", encoding="utf-8")
    with pytest.raises(EmptyCorpusError):
        load_corpus(str(path))


def test_alternation_violation_is_flagged_not_rejected(corpus_writer):
    path = corpus_writer([("d1", [("user", "a"), ("user", "b"), ("agent", "c")])])
    dialogues, report = load_corpus(path)
    assert report.alternation_violations == [("d1", 1)]
    assert len(build_pairs(dialogues)) == 1


def test_agent_turn_without_context_is_skipped(corpus_writer):
    dialogues, report = load_corpus(corpus_writer([("d1", [("agent", "welcome"), ("user", "hi"), ("agent", "yes")])]))
    pairs = build_pairs(dialogues, report=report)
    assert len(pairs) == 1
    assert report.skipped_agent_turns == [("d1", 0)]


def test_context_cap_drops_oldest_turns():
    history = [["a", "b", "c"], ["d", "e"], ["f"]]
    assert assemble_context(history, 4) == ["d", "e", SEP_TOKEN, "f"]
    assert assemble_context(history, 2) == ["f"]
    assert assemble_context([["a", "b", "c", "d"]], 2) == ["c", "d"]
    assert len(assemble_context(history, 256)) == 8


def test_bigram_stats_examples():
    stats = bigram_stats([["a", "b", "a", "b"]])
    assert (stats.total_count, stats.unique_count) == (3, 2)
    empty = bigram_stats([])
    assert (empty.total_count, empty.unique_count, empty.average_occurrence) == (0, 0, 0.0)
    assert ("a", "b") in stats and ("b", "b") not in stats


def test_bigram_stats_brute_force():
    rng = random.Random(5)
    for _ in range(20):
        sentences = [[rng.choice("abcd") for _ in range(rng.randint(0, 6))] for _ in range(rng.randint(0, 10))]
        stats = bigram_stats(sentences)
        every = [(s[i], s[i + 1]) for s in sentences for i in range(len(s) - 1)]
        assert stats.total_count == len(every) == sum(max(len(s) - 1, 0) for s in sentences)
        assert stats.unique_count == len(set(every))
        if every:
            assert stats.average_occurrence == stats.total_count / stats.unique_count


def test_corpus_report_never_crosses_turns(corpus_writer):
    dialogues, _ = load_corpus(corpus_writer([("d1", [("user", "a b"), ("agent", "c d"), ("user", "e"), ("agent", "f f")])]))
    report = corpus_bigram_report(build_pairs(dialogues))
    assert split_on_sep(["a", "b", SEP_TOKEN, "c"]) == [["a", "b"], ["c"]]
    # contexts: [a b] and [a b | c d | e] -> (a,b) x2, (c,d) x1
    assert report["contexts"].total_count == 3 and report["contexts"].unique_count == 2
    # targets: [c d], [f f] -> EOS excluded
    assert report["targets"].total_count == 2


def test_split_is_deterministic_and_respects_ids(corpus_writer):
    dialogues, _ = load_corpus(corpus_writer(
        [(f"dlg-{i}", [("user", "x"), ("agent", "y")]) for i in range(200)]))
    first = split_dialogues(dialogues, 0.1)
    second = split_dialogues(dialogues, 0.1)
    assert [d.dialogue_id for d in first[1]] == [d.dialogue_id for d in second[1]]
    assert 5 <= len(first[1]) <= 40
    train, valid = split_dialogues(dialogues, 0.1, valid_ids={"dlg-3", "dlg-7"})
    assert [d.dialogue_id for d in valid] == ["dlg-3", "dlg-7"]
    assert len(train) == 198


def test_pairs_round_trip(tmp_path, corpus_writer):
    dialogues, _ = load_corpus(corpus_writer([("d1", [("user", "a b"), ("agent", "c")])]))
    pairs = build_pairs(dialogues)
    path = tmp_path / "pairs.jsonl"
    save_pairs(pairs, str(path))
    assert load_pairs(str(path)) == pairs
