import json

import numpy as np

from core.autograd import Node, constant
from core.errors import ContractError
from evaluation.metrics import MetricsReport, Ratio
from models.base_model import DecoderState, Seq2SeqModel
from training.trainer import RunRecord


class ScriptedModel(Seq2SeqModel):
    """Decoder whose logits are a function of the tokens emitted so far."""

    def __init__(self, vocab_size, logits_fn, params=None, **kwargs):
        super().__init__(vocab_size, **kwargs)
        self.logits_fn = logits_fn
        self.params = params or {}

    def encode(self, context_ids):
        if len(context_ids) == 0:
            raise ContractError("cannot encode an empty context")
        return DecoderState(constant(np.zeros(0)), None, self.bos_id)

    def step_logits(self, state):
        prefix = [int(t) for t in state.hidden.value]
        if state.last_token != self.bos_id:
            prefix.append(state.last_token)
        logits = self.logits_fn(tuple(prefix))
        node = logits if isinstance(logits, Node) else constant(np.asarray(logits, dtype=np.float64))
        return node, DecoderState(constant(np.array(prefix, dtype=np.float64)), None, state.last_token)

    def parameters(self):
        return self.params


def write_corpus(path, dialogues):
    """dialogues: [(dialogue_id, [(speaker, text), ...]), ...]"""
    with open(path, "w", encoding="utf-8") as f:
        for dialogue_id, turns in dialogues:
            record = {"dialogue_id": dialogue_id,
                      "turns": [{"speaker": s, "text": t} for s, t in turns]}
            f.write(json.dumps(record) + "\n")
    return str(path)


def make_report(bleu=0.0, distinct2=0.0):
    return MetricsReport(bleu=bleu, distinct1=Ratio(1, 2), distinct2=Ratio(int(round(distinct2 * 1000)), 1000),
                         unseen=Ratio(1, 4), word_repeat=Ratio(0, 4), mean_d_sem=0.5, response_count=4)


def make_record(seed, points, diverged_step=None):
    """points: [(step, bleu, distinct2), ...]"""
    return RunRecord(seed=seed, metrics=[(step, make_report(b, d)) for step, b, d in points],
                     diverged_step=diverged_step)
