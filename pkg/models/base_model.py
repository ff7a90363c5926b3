"""
Base Model - Abstract encoder-decoder interface shared by every sequence model

Concrete models implement encode() and step_logits(); masking, teacher forcing and
response sampling are built once here on top of those two methods.
"""

from abc import ABC, abstractmethod
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from core.autograd import Node, index, log, softmax, total
from core.errors import ContractError
from core.rng import RngStreams, sample_categorical
from dialogue.vocabulary import BOS_ID, EOS_ID, PAD_ID, SEP_ID, SPECIAL_IDS


@dataclass(frozen=True)
class DecoderState:
    """Recurrent state plus the token the decoder reads next."""

    hidden: Node
    cell: Optional[Node]
    last_token: int

    def with_token(self, token_id: int) -> "DecoderState":
        return replace(self, last_token=int(token_id))


@dataclass
class SampledResponse:
    """A response drawn from the model, with the masks it was drawn under."""

    token_ids: List[int] = field(default_factory=list)
    logprobs: List[Node] = field(default_factory=list)
    masks: List[Optional[np.ndarray]] = field(default_factory=list)
    # per step: unmasked probability of the ids the exploration mask removed
    masked_mass: List[float] = field(default_factory=list)

    def total_logprob(self) -> Node:
        return total(self.logprobs)


def pick(probs: Node, token_id: int) -> Node:
    """Select one token's probability from a (.., V) distribution node."""
    position = (0,) * (probs.value.ndim - 1) + (int(token_id),)
    return index(probs, position)


class Seq2SeqModel(ABC):
    """
    Abstract base class for all encoder-decoder models.

    blocked_ids are permanently masked from the decoder output; reserved_ids are
    never touched by exploration masking. EOS can be neither.
    """

    def __init__(self, vocab_size: int, eos_id: int = EOS_ID, bos_id: int = BOS_ID,
                 blocked_ids: Sequence[int] = (PAD_ID, BOS_ID, SEP_ID),
                 reserved_ids: Sequence[int] = SPECIAL_IDS):
        if eos_id in blocked_ids:
            raise ContractError("EOS cannot be permanently masked")
        self.vocab_size = vocab_size
        self.eos_id = eos_id
        self.bos_id = bos_id

        self.blocked_mask = np.zeros(vocab_size, dtype=bool)
        self.blocked_mask[[i for i in blocked_ids if i < vocab_size]] = True
        self.maskable = np.ones(vocab_size, dtype=bool)
        self.maskable[[i for i in reserved_ids if i < vocab_size]] = False
        self.maskable[eos_id] = False

    @abstractmethod
    def encode(self, context_ids: Sequence[int]) -> DecoderState:
        """Encode a non-empty context into the decoder's initial state (reading BOS next)."""
        pass

    @abstractmethod
    def step_logits(self, state: DecoderState) -> Tuple[Node, DecoderState]:
        """Advance the decoder by reading state.last_token; return logits over the vocabulary."""
        pass

    @abstractmethod
    def parameters(self) -> Dict[str, Node]:
        """Return the named parameter nodes."""
        pass

    def decode_step(self, state: DecoderState,
                    mask: Optional[np.ndarray] = None) -> Tuple[Node, DecoderState]:
        """
        Distribution over the vocabulary for the next token.

        Masked ids (the optional mask plus the permanently blocked ids) get probability
        exactly 0 and the rest is renormalized.
        """
        combined = self._combined_mask(mask)
        logits, next_state = self.step_logits(state)
        return softmax(logits, mask=combined), next_state

    def _combined_mask(self, mask: Optional[np.ndarray]) -> np.ndarray:
        combined = self.blocked_mask
        if mask is not None:
            mask = np.asarray(mask, dtype=bool)
            if mask.shape != (self.vocab_size,):
                raise ContractError(f"mask must have shape ({self.vocab_size},), got {mask.shape}")
            if mask[self.eos_id]:
                raise ContractError("EOS cannot be masked")
            combined = combined | mask
        if combined.all():
            raise ContractError("mask covers every id")
        return combined

    def masked_mass(self, logits: np.ndarray, mask: Optional[np.ndarray]) -> float:
        """Probability the unmasked distribution puts on the ids in mask."""
        if mask is None or not mask.any():
            return 0.0
        logits = np.asarray(logits, dtype=np.float64).reshape(-1)
        allowed = ~self.blocked_mask
        weights = np.where(allowed, np.exp(logits - logits[allowed].max()), 0.0)
        return float(weights[mask & allowed].sum() / weights.sum())

    def exploration_mask(self, p_drop: float, stream: np.random.Generator) -> np.ndarray:
        """Mask each non-reserved id independently with probability p_drop."""
        draws = stream.random(self.vocab_size)
        return self.maskable & (draws < p_drop)

    def sequence_logprobs(self, context_ids: Sequence[int], token_ids: Sequence[int],
                          masks: Optional[Sequence[Optional[np.ndarray]]] = None) -> List[Node]:
        """Per-step log-probabilities of token_ids fed back one by one (teacher forcing)."""
        state = self.encode(context_ids)
        logprobs = []
        for step, token in enumerate(token_ids):
            mask = masks[step] if masks is not None else None
            probs, state = self.decode_step(state, mask)
            logprobs.append(log(pick(probs, token)))
            state = state.with_token(token)
        return logprobs

    def teacher_forced_logprobs(self, context_ids: Sequence[int], target_ids: Sequence[int]) -> List[Node]:
        """Log-probabilities of every target token, EOS included."""
        if not target_ids:
            raise ContractError("target must be non-empty")
        return self.sequence_logprobs(context_ids, target_ids)

    def sample_response(self, context_ids: Sequence[int], max_len: int, p_drop: float,
                        streams: RngStreams) -> SampledResponse:
        """
        Sample a response token by token until EOS or max_len.

        With p_drop > 0 a fresh exploration mask is drawn from the masking stream at
        every step; log-probabilities are those of the renormalized masked distribution.
        """
        if max_len < 1:
            raise ContractError("max_len must be >= 1")
        if not 0.0 <= p_drop < 1.0:
            raise ContractError("p_drop must be in [0, 1)")

        response = SampledResponse()
        state = self.encode(context_ids)
        for _ in range(max_len):
            mask = self.exploration_mask(p_drop, streams.masking) if p_drop > 0 else None
            combined = self._combined_mask(mask)
            logits, state = self.step_logits(state)
            probs = softmax(logits, mask=combined)
            token = sample_categorical(probs.value.reshape(-1), streams.sampling)
            response.token_ids.append(token)
            response.logprobs.append(log(pick(probs, token)))
            response.masks.append(mask)
            response.masked_mass.append(self.masked_mass(logits.value, mask))
            if token == self.eos_id:
                break
            state = state.with_token(token)
        return response

    def to_state_dict(self) -> Dict[str, np.ndarray]:
        return {name: node.value.copy() for name, node in self.parameters().items()}

    def load_state_dict(self, state: Dict[str, np.ndarray]):
        """Copy parameter values in place; names and shapes must match exactly."""
        params = self.parameters()
        if set(state) != set(params):
            raise ContractError(f"parameter names differ: {sorted(set(state) ^ set(params))}")
        for name, node in params.items():
            value = np.asarray(state[name], dtype=np.float64)
            if value.shape != node.value.shape:
                raise ContractError(f"{name}: shape {value.shape} != {node.value.shape}")
            node.value[...] = value
