import itertools
import math

import numpy as np
import pytest

from core.errors import ContractError
from dialogue.vocabulary import EOS_ID, UNK_ID
from generators.base_generator import get_generator, list_generator_modes
from generators.beam_generator import BeamGenerator, beam_search
from generators.greedy_generator import greedy_decode
from generators.sample_generator import sample_decode
from models.lstm_seq2seq import LstmSeq2Seq

from helpers import ScriptedModel

VOCAB_SIZE = 8
OFF = -1000.0


def _logits(**values):
    row = np.full(VOCAB_SIZE, OFF)
    for token, value in values.items():
        row[int(token[1:])] = value
    return row


def test_greedy_follows_argmax_until_eos():
    script = {
        (): _logits(t5=2.0, t6=1.0, t3=0.0),
        (5,): _logits(t7=3.0, t3=1.0),
        (5, 7): _logits(t3=5.0, t6=1.0),
    }
    model = ScriptedModel(VOCAB_SIZE, lambda prefix: script[prefix])
    assert greedy_decode(model, [5], max_len=10) == [5, 7, EOS_ID]


def test_greedy_stops_at_max_len():
    model = ScriptedModel(VOCAB_SIZE, lambda prefix: _logits(t6=1.0, t3=0.0))
    assert greedy_decode(model, [5], max_len=3) == [6, 6, 6]


def test_greedy_tie_goes_to_smaller_id():
    model = ScriptedModel(VOCAB_SIZE, lambda prefix: _logits(t7=1.0, t6=1.0, t3=1.0))
    assert greedy_decode(model, [5], max_len=1) == [EOS_ID]


def test_beam_width_one_matches_greedy():
    rng = np.random.default_rng(0)
    model = LstmSeq2Seq.initialize(VOCAB_SIZE, 4, 6, rng)
    for _ in range(100):
        context = [int(t) for t in rng.integers(5, VOCAB_SIZE, size=rng.integers(1, 6))]
        assert beam_search(model, context, 1, 6)[0].token_ids == greedy_decode(model, context, 6)


def test_beam_ranking_matches_brute_force():
    rng = np.random.default_rng(4)
    alphabet = [UNK_ID, 5, 6, 7]
    tables = {}

    def logits(prefix):
        if prefix not in tables:
            row = np.full(VOCAB_SIZE, OFF)
            row[alphabet] = rng.standard_normal(len(alphabet))
            tables[prefix] = row
        return tables[prefix]

    def logprob(prefix, token):
        row = logits(prefix)[alphabet]
        row = row - row.max()
        return row[alphabet.index(token)] - math.log(np.exp(row).sum())

    model = ScriptedModel(VOCAB_SIZE, logits)
    beams = beam_search(model, [5], beam_width=4, max_len=2)

    brute = []
    for first, second in itertools.product(alphabet, repeat=2):
        total = logprob((), first) + logprob((first,), second)
        brute.append(([first, second], total))
    brute.sort(key=lambda item: (-item[1] / 2, item[0]))

    assert [b.token_ids for b in beams] == [tokens for tokens, _ in brute[:4]]
    for beam, (_, total) in zip(beams, brute):
        assert beam.logprob == pytest.approx(total)


def test_beam_length_normalization_prefers_longer_hypothesis():
    script = {
        (): _logits(t3=0.0, t5=0.0),
        (5,): _logits(t3=math.log(0.9), t5=math.log(0.1)),
    }
    model = ScriptedModel(VOCAB_SIZE, lambda prefix: script[prefix])
    beams = beam_search(model, [6], beam_width=2, max_len=5)
    assert [b.token_ids for b in beams] == [[5, EOS_ID], [EOS_ID]]
    assert beams[0].score == pytest.approx((math.log(0.5) + math.log(0.9)) / 2)


def test_beam_ties_break_on_token_id():
    model = ScriptedModel(VOCAB_SIZE, lambda prefix: _logits(t5=1.0, t6=1.0, t7=1.0))
    beams = beam_search(model, [5], beam_width=2, max_len=1)
    assert [b.token_ids for b in beams] == [[5], [6]]


def test_beam_width_must_be_positive():
    with pytest.raises(ContractError):
        BeamGenerator(beam_width=0)


def test_sampling_is_reproducible_per_seed():
    model = LstmSeq2Seq.initialize(VOCAB_SIZE, 4, 4, np.random.default_rng(1))
    first = [sample_decode(model, [5, 6], 8, seed) for seed in range(10)]
    second = [sample_decode(model, [5, 6], 8, seed) for seed in range(10)]
    assert first == second
    assert len({tuple(r) for r in first}) > 1


def test_sampling_a_point_mass():
    model = ScriptedModel(VOCAB_SIZE, lambda prefix: _logits(t7=0.0) if len(prefix) < 2 else _logits(t3=0.0))
    assert sample_decode(model, [5], 10, seed=0) == [7, 7, EOS_ID]


def test_generator_registry():
    assert {"greedy", "sample", "beam"} <= set(list_generator_modes())
    assert get_generator("beam", beam_width=3).beam_width == 3
    assert get_generator("sample", seed=4).seed == 4
    assert get_generator("nucleus") is None


def test_beam_returns_width_hypotheses_best_first():
    model = LstmSeq2Seq.initialize(VOCAB_SIZE, 3, 4, np.random.default_rng(4))
    hypotheses = beam_search(model, [5, 6, 7], beam_width=5, max_len=6)
    assert len(hypotheses) == 5
    scores = [h.score for h in hypotheses]
    assert scores == sorted(scores, reverse=True)
    for h in hypotheses:
        assert h.token_ids[-1] == EOS_ID or len(h.token_ids) == 6
        assert h.score == pytest.approx(h.logprob / len(h.token_ids))


def test_sampled_length_is_geometric():
    # EOS and token 5 equally likely: expected length 2
    model = ScriptedModel(VOCAB_SIZE, lambda prefix: _logits(t5=0.0, t3=0.0))
    generator = get_generator("sample", seed=12)
    runs = 20_000
    lengths = [len(generator.decode(model, [5], max_len=200)) for _ in range(runs)]
    assert np.mean(lengths) == pytest.approx(2.0, abs=0.05)
