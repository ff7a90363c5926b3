import numpy as np
import pytest

from core.errors import SamplingError
from core.rng import STREAM_KEYS, RngStreams, sample_categorical


def test_same_seed_same_draws():
    a, b = RngStreams(7), RngStreams(7)
    for name in STREAM_KEYS:
        np.testing.assert_array_equal(a[name].random(5), b[name].random(5))


def test_streams_do_not_move_each_other():
    untouched = RngStreams(3)
    busy = RngStreams(3)
    busy.sampling.random(1000)
    busy.init.standard_normal(50)
    np.testing.assert_array_equal(untouched.masking.random(10), busy.masking.random(10))
    np.testing.assert_array_equal(untouched.data.permutation(20), busy.data.permutation(20))


def test_streams_differ_by_name_and_seed():
    streams = RngStreams(1)
    assert streams.init.random() != streams.sampling.random()
    assert RngStreams(1).data.random() != RngStreams(2).data.random()


def test_unknown_stream_name():
    with pytest.raises(KeyError):
        RngStreams(0, names=("init", "nope"))


def test_zero_probability_never_sampled():
    stream = RngStreams(0).sampling
    probs = np.array([0.0, 0.25, 0.0, 0.75, 0.0])
    draws = {sample_categorical(probs, stream) for _ in range(2000)}
    assert draws == {1, 3}


def test_frequencies_match_probabilities():
    stream = RngStreams(11).sampling
    probs = np.array([0.5, 0.3, 0.2])
    n = 20000
    counts = np.bincount([sample_categorical(probs, stream) for _ in range(n)], minlength=3)
    expected = n * probs
    chi2 = float(((counts - expected) ** 2 / expected).sum())
    # 2 degrees of freedom; 13.8 is the 0.999 quantile
    assert chi2 < 13.8


def test_one_hot_distribution():
    assert sample_categorical(np.array([0.0, 1.0, 0.0]), RngStreams(0).sampling) == 1


@pytest.mark.parametrize("probs", [[0.0, 0.0], [0.6, 0.6], [-0.1, 1.1], [np.nan, 1.0], []])
def test_invalid_distributions(probs):
    with pytest.raises(SamplingError):
        sample_categorical(np.array(probs, dtype=float), RngStreams(0).sampling)
