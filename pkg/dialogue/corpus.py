"""
Corpus - Dialogue ingestion, tokenization, training pairs, splits and bigram statistics
"""

import hashlib
import json
import logging
import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple

from core.errors import CorpusParseError, EmptyCorpusError
from dialogue.vocabulary import EOS_TOKEN, SEP_TOKEN, Vocabulary

logger = logging.getLogger(__name__)

SPEAKERS = ("user", "agent")
_TOKEN_PATTERN = re.compile(r"\w+|[^\w\s]", re.UNICODE)


@dataclass
class Turn:
    speaker: str
    text: str
    tokens: List[str] = field(default_factory=list)


@dataclass
class Dialogue:
    dialogue_id: str
    turns: List[Turn]


@dataclass
class TrainingPair:
    """Flattened history plus current user turn, and the agent response ending in EOS."""

    dialogue_id: str
    context_tokens: List[str]
    target_tokens: List[str]

    def to_dict(self) -> Dict:
        return {
            "dialogue_id": self.dialogue_id,
            "context": self.context_tokens,
            "target": self.target_tokens,
        }

    @classmethod
    def from_dict(cls, data: Dict) -> "TrainingPair":
        return cls(data["dialogue_id"], list(data["context"]), list(data["target"]))


@dataclass
class EncodedPair:
    context_ids: List[int]
    target_ids: List[int]


@dataclass
class LoadReport:
    """Summary of a corpus load."""

    dialogue_count: int = 0
    turn_count: int = 0
    alternation_violations: List[Tuple[str, int]] = field(default_factory=list)
    skipped_agent_turns: List[Tuple[str, int]] = field(default_factory=list)

    def to_dict(self) -> Dict:
        return {
            "dialogue_count": self.dialogue_count,
            "turn_count": self.turn_count,
            "alternation_violations": [list(v) for v in self.alternation_violations],
            "skipped_agent_turns": [list(v) for v in self.skipped_agent_turns],
        }


@dataclass
class BigramStats:
    """Multiset of bigrams with unique and total counts."""

    counts: Counter = field(default_factory=Counter)

    @property
    def unique_count(self) -> int:
        return len(self.counts)

    @property
    def total_count(self) -> int:
        return sum(self.counts.values())

    @property
    def average_occurrence(self) -> float:
        """total / unique; 0 when there are no bigrams."""
        unique = self.unique_count
        return self.total_count / unique if unique else 0.0

    def __contains__(self, bigram: Tuple[str, str]) -> bool:
        return bigram in self.counts

    def to_dict(self) -> Dict:
        return {
            "unique": self.unique_count,
            "total": self.total_count,
            "average_occurrence": self.average_occurrence,
        }


def tokenize(text: str) -> List[str]:
    """Lowercase, split punctuation into standalone tokens, collapse whitespace."""
    return _TOKEN_PATTERN.findall(text.lower())


def load_corpus(path: str) -> Tuple[List[Dialogue], LoadReport]:
    """
    Load a JSON Lines corpus, one dialogue per line.

    Returns:
        The dialogues in file order and a load report (speaker-alternation
        violations are kept and flagged, not rejected)
    """
    dialogues: List[Dialogue] = []
    report = LoadReport()

    with open(path, "r", encoding="utf-8") as f:
        for line_number, line in enumerate(f, start=1):
            if not line.strip():
                continue
            dialogue = _parse_dialogue_line(line, line_number)
            for position in range(1, len(dialogue.turns)):
                if dialogue.turns[position].speaker == dialogue.turns[position - 1].speaker:
                    report.alternation_violations.append((dialogue.dialogue_id, position))
            dialogues.append(dialogue)
            report.turn_count += len(dialogue.turns)

    if not dialogues:
        raise EmptyCorpusError(f"{path}: corpus holds no dialogues")

    report.dialogue_count = len(dialogues)
    if report.alternation_violations:
        logger.warning(f"{len(report.alternation_violations)} speaker-alternation violations in {path}")
    logger.info(f"Corpus loaded: {path} ({report.dialogue_count} dialogues, {report.turn_count} turns)")
    return dialogues, report


def _parse_dialogue_line(line: str, line_number: int) -> Dialogue:
    try:
        data = json.loads(line)
    except json.JSONDecodeError as e:
        raise CorpusParseError(line_number, f"invalid JSON ({e.msg})") from None

    if not isinstance(data, dict) or not isinstance(data.get("dialogue_id"), str):
        raise CorpusParseError(line_number, "expected an object with a string dialogue_id")
    raw_turns = data.get("turns")
    if not isinstance(raw_turns, list):
        raise CorpusParseError(line_number, "turns must be a list")

    turns = []
    for raw in raw_turns:
        if not isinstance(raw, dict) or raw.get("speaker") not in SPEAKERS or not isinstance(raw.get("text"), str):
            raise CorpusParseError(line_number, f"each turn needs speaker in {SPEAKERS} and a text string")
        turns.append(Turn(raw["speaker"], raw["text"], tokenize(raw["text"])))
    return Dialogue(data["dialogue_id"], turns)


def assemble_context(history: Sequence[List[str]], context_cap: int) -> List[str]:
    """
    Join turns with SEP, dropping the oldest turns until the context fits the cap.

    A single remaining turn longer than the cap keeps its last context_cap tokens.
    """
    turns = [list(t) for t in history]
    while len(turns) > 1 and sum(len(t) for t in turns) + len(turns) - 1 > context_cap:
        turns.pop(0)
    context: List[str] = []
    for position, tokens in enumerate(turns):
        if position:
            context.append(SEP_TOKEN)
        context.extend(tokens)
    return context[-context_cap:]


def build_pairs(dialogues: Iterable[Dialogue], context_cap: int = 256,
                report: Optional[LoadReport] = None) -> List[TrainingPair]:
    """One pair per agent turn that has a non-empty context before it."""
    pairs = []
    for dialogue in dialogues:
        for position, turn in enumerate(dialogue.turns):
            if turn.speaker != "agent":
                continue
            history = [t.tokens for t in dialogue.turns[:position] if t.tokens]
            context = assemble_context(history, context_cap)
            if not context:
                if report is not None:
                    report.skipped_agent_turns.append((dialogue.dialogue_id, position))
                continue
            pairs.append(TrainingPair(dialogue.dialogue_id, context, list(turn.tokens) + [EOS_TOKEN]))
    return pairs


def encode_pair(pair: TrainingPair, vocab: Vocabulary) -> EncodedPair:
    return EncodedPair(vocab.encode(pair.context_tokens), vocab.encode(pair.target_tokens))


def count_unk_substitutions(pairs: Iterable[TrainingPair], vocab: Vocabulary) -> int:
    """Number of corpus tokens that encode to UNK."""
    count = sum(vocab.unk_substitutions(p.context_tokens) + vocab.unk_substitutions(p.target_tokens)
                for p in pairs)
    if count:
        logger.warning(f"{count} tokens fall outside the vocabulary and encode to UNK")
    return count


def split_dialogues(dialogues: Sequence[Dialogue], valid_ratio: float = 0.1,
                    valid_ids: Optional[Set[str]] = None) -> Tuple[List[Dialogue], List[Dialogue]]:
    """
    Deterministic train/validation split.

    With explicit valid_ids those dialogues go to validation; otherwise a dialogue is
    in validation when the SHA-256 of its id falls below valid_ratio of the hash space.
    """
    train, valid = [], []
    for dialogue in dialogues:
        if valid_ids is not None:
            is_valid = dialogue.dialogue_id in valid_ids
        else:
            digest = hashlib.sha256(dialogue.dialogue_id.encode("utf-8")).digest()
            is_valid = int.from_bytes(digest[:8], "big") / 2 ** 64 < valid_ratio
        (valid if is_valid else train).append(dialogue)
    return train, valid


def load_split_ids(path: str) -> Set[str]:
    """Read validation dialogue ids, one per line."""
    return {line.strip() for line in Path(path).read_text(encoding="utf-8").splitlines() if line.strip()}


def bigram_stats(sequences: Iterable[Sequence[str]]) -> BigramStats:
    """Count adjacent bigrams within each sequence (never across sequences)."""
    counts: Counter = Counter()
    for tokens in sequences:
        counts.update(zip(tokens, tokens[1:]))
    return BigramStats(counts)


def split_on_sep(context_tokens: Sequence[str]) -> List[List[str]]:
    """Split a flattened context back into its turns."""
    turns: List[List[str]] = [[]]
    for token in context_tokens:
        if token == SEP_TOKEN:
            turns.append([])
        else:
            turns[-1].append(token)
    return [t for t in turns if t]


def target_sentences(pairs: Iterable[TrainingPair]) -> List[List[str]]:
    """Target token sequences without the trailing EOS."""
    return [[tok for tok in p.target_tokens if tok != EOS_TOKEN] for p in pairs]


def context_sentences(pairs: Iterable[TrainingPair]) -> List[List[str]]:
    return [turn for p in pairs for turn in split_on_sep(p.context_tokens)]


def corpus_bigram_report(pairs: Sequence[TrainingPair]) -> Dict[str, BigramStats]:
    """Bigram statistics of the contexts and of the targets."""
    return {
        "contexts": bigram_stats(context_sentences(pairs)),
        "targets": bigram_stats(target_sentences(pairs)),
    }


def save_pairs(pairs: Iterable[TrainingPair], path: str):
    """Write pairs as JSON Lines."""
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for pair in pairs:
            f.write(json.dumps(pair.to_dict(), ensure_ascii=False, sort_keys=True) + "\n")


def load_pairs(path: str) -> List[TrainingPair]:
    pairs = []
    with open(path, "r", encoding="utf-8") as f:
        for line_number, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                pairs.append(TrainingPair.from_dict(json.loads(line)))
            except (json.JSONDecodeError, KeyError, TypeError) as e:
                raise CorpusParseError(line_number, f"invalid pair ({e})") from None
    return pairs
