"""
Vocabulary - Bidirectional token/id map with reserved special tokens
"""

import hashlib
import logging
from collections import Counter
from pathlib import Path
from typing import Dict, Iterable, List, Sequence

from core.errors import ConfigError, ContractError

PAD_TOKEN = "<pad>"
UNK_TOKEN = "<unk>"
BOS_TOKEN = "<s>"
EOS_TOKEN = "</s>"
SEP_TOKEN = "<sep>"

PAD_ID, UNK_ID, BOS_ID, EOS_ID, SEP_ID = 0, 1, 2, 3, 4

SPECIAL_TOKENS = (PAD_TOKEN, UNK_TOKEN, BOS_TOKEN, EOS_TOKEN, SEP_TOKEN)
SPECIAL_IDS = (PAD_ID, UNK_ID, BOS_ID, EOS_ID, SEP_ID)


class Vocabulary:
    """
    Token <-> id map. Ids 0-4 are always PAD, UNK, BOS, EOS, SEP in that order.
    Unknown tokens encode to UNK.
    """

    def __init__(self, tokens: Sequence[str] = ()):
        self.logger = logging.getLogger(self.__class__.__name__)
        self.id_to_token: List[str] = list(SPECIAL_TOKENS)
        self.token_to_id: Dict[str, int] = {tok: i for i, tok in enumerate(SPECIAL_TOKENS)}
        for token in tokens:
            self.add_token(token)

    def add_token(self, token: str) -> int:
        """Add a token if missing and return its id."""
        if token not in self.token_to_id:
            self.token_to_id[token] = len(self.id_to_token)
            self.id_to_token.append(token)
        return self.token_to_id[token]

    def __len__(self) -> int:
        return len(self.id_to_token)

    def __contains__(self, token: str) -> bool:
        return token in self.token_to_id

    def encode(self, tokens: Iterable[str]) -> List[int]:
        return [self.token_to_id.get(tok, UNK_ID) for tok in tokens]

    def decode(self, ids: Iterable[int]) -> List[str]:
        return [self.id_to_token[i] for i in ids]

    def unk_substitutions(self, tokens: Iterable[str]) -> int:
        """Count tokens that would be replaced by UNK."""
        return sum(1 for tok in tokens if tok not in self.token_to_id)

    def to_text(self) -> str:
        return "\n".join(self.id_to_token) + "\n"

    def content_hash(self) -> str:
        """SHA-256 of the saved vocabulary text; stored in checkpoints."""
        return hashlib.sha256(self.to_text().encode("utf-8")).hexdigest()

    def save(self, path: str):
        """Write one token per line; line number - 1 is the id."""
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            f.write(self.to_text())
        self.logger.info(f"Vocabulary saved: {path} ({len(self)} tokens)")

    @classmethod
    def load(cls, path: str) -> "Vocabulary":
        """Load a vocabulary file written by save()."""
        with open(path, "r", encoding="utf-8", newline="\n") as f:
            lines = f.read().split("\n")
        if lines and lines[-1] == "":
            lines.pop()
        if tuple(lines[:len(SPECIAL_TOKENS)]) != SPECIAL_TOKENS:
            raise ContractError(f"{path}: vocabulary must start with the reserved tokens {SPECIAL_TOKENS}")
        return cls(lines[len(SPECIAL_TOKENS):])


def build_vocab(items: Iterable, min_count: int = 1) -> Vocabulary:
    """
    Build a vocabulary from training pairs (context and target) or plain token sequences.

    Tokens seen fewer than min_count times are left out (they encode to UNK).
    Ids are assigned by frequency descending, then lexicographically.
    """
    if min_count < 1:
        raise ConfigError([("min_count", "min_count must be >= 1")])
    counts: Counter = Counter()
    for item in items:
        if hasattr(item, "context_tokens"):
            sequences = (item.context_tokens, item.target_tokens)
        else:
            sequences = (item,)
        for sequence in sequences:
            counts.update(tok for tok in sequence if tok not in SPECIAL_TOKENS)
    kept = sorted((tok for tok, c in counts.items() if c >= min_count),
                  key=lambda tok: (-counts[tok], tok))
    vocab = Vocabulary(kept)
    vocab.logger.info(f"Vocabulary built: {len(vocab)} tokens "
                      f"({len(counts) - len(kept)} below min_count={min_count})")
    return vocab
