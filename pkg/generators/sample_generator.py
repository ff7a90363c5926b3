"""
Sample Generator - Stochastic decoding from the model distribution
"""

from typing import List, Sequence

from core.autograd import no_grad
from core.rng import RngStreams
from models.base_model import Seq2SeqModel
from .base_generator import Hypothesis, ResponseGenerator, register_generator


class SampleGenerator(ResponseGenerator):
    """Categorical sampling at every step, reproducible per seed."""

    def __init__(self, seed: int = 0, **_options):
        super().__init__("sample")
        self.seed = seed
        self.streams = RngStreams(seed, names=("sampling", "masking"))

    def generate(self, model: Seq2SeqModel, context_ids: Sequence[int],
                 max_len: int) -> List[Hypothesis]:
        with no_grad():
            response = model.sample_response(context_ids, max_len, 0.0, self.streams)
        return [Hypothesis(response.token_ids, sum(lp.item() for lp in response.logprobs))]


def sample_decode(model: Seq2SeqModel, context_ids: Sequence[int], max_len: int, seed: int) -> List[int]:
    """Decode one response with a fresh generator seeded by seed."""
    return SampleGenerator(seed).decode(model, context_ids, max_len)


register_generator("sample", SampleGenerator)
