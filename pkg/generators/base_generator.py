"""
Base Generator - Abstract base class for inference-time response generators
"""

from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence

from models.base_model import Seq2SeqModel


@dataclass
class Hypothesis:
    """A decoded token sequence and its summed log-probability."""

    token_ids: List[int] = field(default_factory=list)
    logprob: float = 0.0

    @property
    def score(self) -> float:
        """Length-normalized log-probability."""
        return self.logprob / len(self.token_ids) if self.token_ids else 0.0


class ResponseGenerator(ABC):
    """
    Abstract base class for all decoding strategies.
    Each mode (greedy, sample, beam) has its own generator implementation.
    """

    def __init__(self, mode_name: str):
        self.mode_name = mode_name

    @abstractmethod
    def generate(self, model: Seq2SeqModel, context_ids: Sequence[int],
                 max_len: int) -> List[Hypothesis]:
        """Decode a context; hypotheses come best first."""
        pass

    def decode(self, model: Seq2SeqModel, context_ids: Sequence[int], max_len: int) -> List[int]:
        """Token ids of the best hypothesis."""
        return self.generate(model, context_ids, max_len)[0].token_ids

    def describe(self) -> str:
        return self.mode_name


# Global registry of available generators: mode -> factory taking keyword options
_GENERATORS_REGISTRY: Dict[str, Callable[..., ResponseGenerator]] = {}


def register_generator(mode_name: str, factory: Callable[..., ResponseGenerator]):
    """Register a generator factory for a decoding mode."""
    _GENERATORS_REGISTRY[mode_name] = factory


def get_generator(mode_name: str, **options) -> Optional[ResponseGenerator]:
    """Create the generator for a decoding mode, or None if the mode is unknown."""
    factory = _GENERATORS_REGISTRY.get(mode_name)
    return factory(**options) if factory else None


def list_generator_modes() -> List[str]:
    """Get list of all registered decoding modes."""
    return list(_GENERATORS_REGISTRY.keys())
