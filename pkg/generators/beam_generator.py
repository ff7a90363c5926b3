"""
Beam Generator - Length-normalized beam search
"""

import logging
import math
from dataclasses import dataclass
from typing import List, Sequence

import numpy as np

from core.autograd import no_grad
from core.errors import ContractError
from models.base_model import DecoderState, Seq2SeqModel
from .base_generator import Hypothesis, ResponseGenerator, register_generator


@dataclass
class _Beam:
    token_ids: List[int]
    logprob: float
    state: DecoderState


class BeamGenerator(ResponseGenerator):
    """
    Beam search ranked by (sum of log-probabilities) / length.

    Hypotheses that emit EOS are set aside; search stops once beam_width of them
    are complete, or when every live beam reaches max_len. Ties break on the parent
    beam's rank, then the smaller token id.
    """

    def __init__(self, beam_width: int = 5, **_options):
        super().__init__("beam")
        if beam_width < 1:
            raise ContractError("beam_width must be >= 1")
        self.beam_width = beam_width
        self.logger = logging.getLogger(self.__class__.__name__)

    def generate(self, model: Seq2SeqModel, context_ids: Sequence[int],
                 max_len: int) -> List[Hypothesis]:
        if max_len < 1:
            raise ContractError("max_len must be >= 1")

        completed: List[Hypothesis] = []
        with no_grad():
            live = [_Beam([], 0.0, model.encode(context_ids))]
            for _ in range(max_len):
                candidates = []
                for rank, beam in enumerate(live):
                    probs, next_state = model.decode_step(beam.state)
                    p = probs.value.reshape(-1)
                    length = len(beam.token_ids) + 1
                    for token in np.flatnonzero(p > 0.0):
                        logprob = beam.logprob + math.log(p[token])
                        candidates.append((-logprob / length, rank, int(token), logprob, beam, next_state))

                candidates.sort(key=lambda c: (c[0], c[1], c[2]))
                live = []
                for _, _, token, logprob, beam, next_state in candidates[:self.beam_width - len(completed)]:
                    tokens = beam.token_ids + [token]
                    if token == model.eos_id:
                        completed.append(Hypothesis(tokens, logprob))
                    else:
                        live.append(_Beam(tokens, logprob, next_state.with_token(token)))

                if len(completed) >= self.beam_width or not live:
                    break
            else:
                # every surviving beam hit the length cap
                completed.extend(Hypothesis(b.token_ids, b.logprob) for b in live)

        ranked = sorted(completed, key=lambda h: (-h.score, h.token_ids))
        self.logger.debug(f"Beam search finished with {len(ranked)} hypotheses")
        return ranked[:self.beam_width]


def beam_search(model: Seq2SeqModel, context_ids: Sequence[int], beam_width: int,
                max_len: int) -> List[Hypothesis]:
    return BeamGenerator(beam_width).generate(model, context_ids, max_len)


register_generator("beam", BeamGenerator)
