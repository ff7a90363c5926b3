"""
Greedy Generator - Argmax decoding
"""

import math
from typing import List, Sequence

import numpy as np

from core.autograd import no_grad
from core.errors import ContractError
from models.base_model import Seq2SeqModel
from .base_generator import Hypothesis, ResponseGenerator, register_generator


class GreedyGenerator(ResponseGenerator):
    """Emit the most probable token at every step; ties go to the smallest id."""

    def __init__(self, **_options):
        super().__init__("greedy")

    def generate(self, model: Seq2SeqModel, context_ids: Sequence[int],
                 max_len: int) -> List[Hypothesis]:
        if max_len < 1:
            raise ContractError("max_len must be >= 1")
        hypothesis = Hypothesis()
        with no_grad():
            state = model.encode(context_ids)
            for _ in range(max_len):
                probs, state = model.decode_step(state)
                p = probs.value.reshape(-1)
                token = int(np.argmax(p))
                hypothesis.token_ids.append(token)
                hypothesis.logprob += math.log(p[token])
                if token == model.eos_id:
                    break
                state = state.with_token(token)
        return [hypothesis]


def greedy_decode(model: Seq2SeqModel, context_ids: Sequence[int], max_len: int) -> List[int]:
    return GreedyGenerator().decode(model, context_ids, max_len)


register_generator("greedy", GreedyGenerator)
