"""
LSTM Seq2Seq - Single-layer unidirectional LSTM encoder-decoder and the model registry
"""

import logging
import math
from typing import Dict, Optional, Sequence, Tuple, Type

import numpy as np

from core.autograd import (Node, add, concat, constant, embedding_gather, matmul, mul,
                           parameter, sigmoid, slice_, tanh)
from core.errors import ContractError
from models.base_model import DecoderState, Seq2SeqModel

PARAM_NAMES = (
    "embedding",
    "encoder_weight",
    "encoder_bias",
    "decoder_weight",
    "decoder_bias",
    "output_weight",
    "output_bias",
)


class LstmSeq2Seq(Seq2SeqModel):
    """
    Encoder and decoder LSTMs sharing one input embedding matrix.

    Gate layout in the fused (E + H) x 4H weight: input, forget, candidate, output.
    """

    def __init__(self, vocab_size: int, embedding_size: int, hidden_size: int,
                 values: Dict[str, np.ndarray], **kwargs):
        super().__init__(vocab_size, **kwargs)
        self.logger = logging.getLogger(self.__class__.__name__)
        self.embedding_size = embedding_size
        self.hidden_size = hidden_size

        expected = self.parameter_shapes(vocab_size, embedding_size, hidden_size)
        if set(values) != set(expected):
            raise ContractError(f"expected parameters {sorted(expected)}, got {sorted(values)}")
        self.params: Dict[str, Node] = {}
        for name in PARAM_NAMES:
            value = np.asarray(values[name], dtype=np.float64)
            if value.shape != expected[name]:
                raise ContractError(f"{name}: shape {value.shape} != {expected[name]}")
            self.params[name] = parameter(value, name)

    @staticmethod
    def parameter_shapes(vocab_size: int, embedding_size: int,
                         hidden_size: int) -> Dict[str, Tuple[int, ...]]:
        gates = 4 * hidden_size
        return {
            "embedding": (vocab_size, embedding_size),
            "encoder_weight": (embedding_size + hidden_size, gates),
            "encoder_bias": (gates,),
            "decoder_weight": (embedding_size + hidden_size, gates),
            "decoder_bias": (gates,),
            "output_weight": (hidden_size, vocab_size),
            "output_bias": (vocab_size,),
        }

    @classmethod
    def initialize(cls, vocab_size: int, embedding_size: int, hidden_size: int,
                   rng: np.random.Generator, **kwargs) -> "LstmSeq2Seq":
        """
        Random initialization from the given stream, in PARAM_NAMES order.

        Embedding rows ~ N(0, 1); every other weight ~ U(-1/sqrt(H), 1/sqrt(H)).
        """
        bound = 1.0 / math.sqrt(hidden_size)
        values = {}
        for name, shape in cls.parameter_shapes(vocab_size, embedding_size, hidden_size).items():
            if name == "embedding":
                values[name] = rng.standard_normal(shape)
            else:
                values[name] = rng.uniform(-bound, bound, size=shape)
        return cls(vocab_size, embedding_size, hidden_size, values, **kwargs)

    @classmethod
    def zeros(cls, vocab_size: int, embedding_size: int, hidden_size: int, **kwargs) -> "LstmSeq2Seq":
        shapes = cls.parameter_shapes(vocab_size, embedding_size, hidden_size)
        return cls(vocab_size, embedding_size, hidden_size,
                   {name: np.zeros(shape) for name, shape in shapes.items()}, **kwargs)

    def parameters(self) -> Dict[str, Node]:
        return self.params

    def _cell(self, x: Node, hidden: Node, cell: Node, weight: Node, bias: Node) -> Tuple[Node, Node]:
        size = self.hidden_size
        gates = add(matmul(concat([x, hidden], axis=1), weight), bias)
        input_gate = sigmoid(slice_(gates, 0, size))
        forget_gate = sigmoid(slice_(gates, size, 2 * size))
        candidate = tanh(slice_(gates, 2 * size, 3 * size))
        output_gate = sigmoid(slice_(gates, 3 * size, 4 * size))
        new_cell = add(mul(forget_gate, cell), mul(input_gate, candidate))
        new_hidden = mul(output_gate, tanh(new_cell))
        return new_hidden, new_cell

    def encode(self, context_ids: Sequence[int]) -> DecoderState:
        if len(context_ids) == 0:
            raise ContractError("cannot encode an empty context")
        hidden = constant(np.zeros((1, self.hidden_size)))
        cell = constant(np.zeros((1, self.hidden_size)))
        for token in context_ids:
            x = embedding_gather(self.params["embedding"], [token])
            hidden, cell = self._cell(x, hidden, cell,
                                      self.params["encoder_weight"], self.params["encoder_bias"])
        return DecoderState(hidden, cell, self.bos_id)

    def step_logits(self, state: DecoderState) -> Tuple[Node, DecoderState]:
        x = embedding_gather(self.params["embedding"], [state.last_token])
        hidden, cell = self._cell(x, state.hidden, state.cell,
                                  self.params["decoder_weight"], self.params["decoder_bias"])
        logits = add(matmul(hidden, self.params["output_weight"]), self.params["output_bias"])
        return logits, DecoderState(hidden, cell, state.last_token)

    def describe(self) -> Dict[str, int]:
        return {
            "vocab_size": self.vocab_size,
            "embedding_size": self.embedding_size,
            "hidden_size": self.hidden_size,
        }


# Global registry of available models
_MODELS_REGISTRY: Dict[str, Type[LstmSeq2Seq]] = {}


def register_model(kind: str, model_class: Type[LstmSeq2Seq]):
    """Register a model class under a kind name."""
    _MODELS_REGISTRY[kind] = model_class


def get_model_class(kind: str) -> Optional[Type[LstmSeq2Seq]]:
    """Get the model class registered for a kind."""
    return _MODELS_REGISTRY.get(kind)


def list_model_kinds():
    return list(_MODELS_REGISTRY.keys())


register_model("lstm", LstmSeq2Seq)
