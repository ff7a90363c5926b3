"""
Metrics - BLEU, distinct-n, unseen-bigram fraction and word-repeat fraction

Special tokens are stripped from every response before counting. Ratios count
n-gram occurrences (multiset denominators).
"""

import math
from collections import Counter
from dataclasses import asdict, dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from core.errors import ContractError
from dialogue.corpus import BigramStats
from dialogue.embeddings import EmbeddingTable, semantic_distance
from dialogue.vocabulary import SPECIAL_TOKENS

_SPECIALS = frozenset(SPECIAL_TOKENS)

METRIC_COLUMNS = ("step", "bleu", "distinct1", "distinct2", "unseen_frac", "word_repeat_frac", "mean_d_sem")


@dataclass
class Ratio:
    numerator: int = 0
    denominator: int = 0

    @property
    def value(self) -> float:
        return self.numerator / self.denominator if self.denominator else 0.0

    def merge(self, other: "Ratio") -> "Ratio":
        return Ratio(self.numerator + other.numerator, self.denominator + other.denominator)


@dataclass
class MetricsReport:
    """One evaluation's metrics, with the counts behind every ratio."""

    bleu: float
    distinct1: Ratio
    distinct2: Ratio
    unseen: Ratio
    word_repeat: Ratio
    mean_d_sem: float
    response_count: int = 0

    def to_row(self, step: int) -> Dict[str, float]:
        return {
            "step": step,
            "bleu": self.bleu,
            "distinct1": self.distinct1.value,
            "distinct2": self.distinct2.value,
            "unseen_frac": self.unseen.value,
            "word_repeat_frac": self.word_repeat.value,
            "mean_d_sem": self.mean_d_sem,
        }

    def to_dict(self) -> Dict:
        return asdict(self)

    def format(self) -> str:
        """Pretty-printed multi-line text."""
        lines = [
            f"responses           {self.response_count}",
            f"BLEU-4              {self.bleu:.4f}",
            f"distinct-1          {self.distinct1.value:.4f}  ({self.distinct1.numerator}/{self.distinct1.denominator})",
            f"distinct-2          {self.distinct2.value:.4f}  ({self.distinct2.numerator}/{self.distinct2.denominator})",
            f"% unseen bigrams    {100 * self.unseen.value:.2f}  ({self.unseen.numerator}/{self.unseen.denominator})",
            f"word-repeat frac    {self.word_repeat.value:.4f}  ({self.word_repeat.numerator}/{self.word_repeat.denominator})",
            f"mean d_SEM          {self.mean_d_sem:.4f}",
        ]
        return "\n".join(lines)


def strip_special(tokens: Iterable[str]) -> List[str]:
    return [tok for tok in tokens if tok not in _SPECIALS]


def ngrams(tokens: Sequence[str], n: int) -> List[Tuple[str, ...]]:
    return [tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1)]


def modified_precision(candidates: Sequence[Sequence[str]], references: Sequence[Sequence[str]],
                       n: int) -> Tuple[int, int]:
    """Corpus-level clipped n-gram matches and candidate n-gram total."""
    matches = total = 0
    for candidate, reference in zip(candidates, references):
        cand_counts = Counter(ngrams(candidate, n))
        ref_counts = Counter(ngrams(reference, n))
        matches += sum(min(count, ref_counts[gram]) for gram, count in cand_counts.items())
        total += sum(cand_counts.values())
    return matches, total


def bleu(candidates: Sequence[Sequence[str]], references: Sequence[Sequence[str]],
         max_n: int = 4) -> float:
    """
    Corpus-level BLEU-4, one reference per candidate.

    p_n = clipped matches / candidate n-grams summed over the corpus. For n >= 2 a
    zero match count is smoothed to 1 / (total + 1). A zero unigram precision gives 0.
    Brevity penalty exp(1 - r/c) when c <= r. Score = BP * exp(mean_n log p_n).
    """
    if not candidates or len(candidates) != len(references):
        raise ContractError("bleu needs equal-length, non-empty candidate and reference lists")
    candidates = [strip_special(c) for c in candidates]
    references = [strip_special(r) for r in references]

    log_precisions = []
    for n in range(1, max_n + 1):
        matches, total = modified_precision(candidates, references, n)
        if n == 1 and matches == 0:
            return 0.0
        if matches == 0:
            precision = 1.0 / (total + 1)
        else:
            precision = matches / total
        log_precisions.append(math.log(precision))

    cand_len = sum(len(c) for c in candidates)
    ref_len = sum(len(r) for r in references)
    if cand_len == 0:
        return 0.0
    brevity = 1.0 if cand_len > ref_len else math.exp(1.0 - ref_len / cand_len)
    return brevity * math.exp(sum(log_precisions) / max_n)


def distinct_counts(responses: Iterable[Sequence[str]], n: int) -> Ratio:
    grams: List[Tuple[str, ...]] = []
    for response in responses:
        grams.extend(ngrams(strip_special(response), n))
    return Ratio(len(set(grams)), len(grams))


def distinct_n(responses: Iterable[Sequence[str]], n: int) -> float:
    """Unique n-grams / total n-grams across all responses; 0 when there are none."""
    if n not in (1, 2):
        raise ContractError("distinct_n supports n in {1, 2}")
    return distinct_counts(responses, n).value


def unseen_counts(responses: Iterable[Sequence[str]], training_bigrams: BigramStats) -> Ratio:
    ratio = Ratio()
    for response in responses:
        bigrams = ngrams(strip_special(response), 2)
        ratio.denominator += len(bigrams)
        ratio.numerator += sum(1 for b in bigrams if b not in training_bigrams)
    return ratio


def unseen_bigram_fraction(responses: Iterable[Sequence[str]], training_bigrams: BigramStats) -> float:
    """Share of generated bigram occurrences absent from the training-target bigrams."""
    return unseen_counts(responses, training_bigrams).value


def word_repeat_counts(responses: Iterable[Sequence[str]]) -> Ratio:
    ratio = Ratio()
    for response in responses:
        bigrams = ngrams(strip_special(response), 2)
        ratio.denominator += len(bigrams)
        ratio.numerator += sum(1 for a, b in bigrams if a == b)
    return ratio


def word_repeat_fraction(responses: Iterable[Sequence[str]]) -> float:
    """Share of generated bigrams whose two tokens are identical."""
    return word_repeat_counts(responses).value


def compute_report(candidates: Sequence[Sequence[str]], references: Sequence[Sequence[str]],
                   training_bigrams: BigramStats,
                   table: Optional[EmbeddingTable] = None) -> MetricsReport:
    """Every metric for one set of responses against their references."""
    if not candidates:
        raise ContractError("cannot evaluate an empty set of responses")
    mean_d_sem = 0.0
    if table is not None:
        mean_d_sem = sum(semantic_distance(c, r, table) for c, r in zip(candidates, references)) / len(candidates)
    return MetricsReport(
        bleu=bleu(candidates, references),
        distinct1=distinct_counts(candidates, 1),
        distinct2=distinct_counts(candidates, 2),
        unseen=unseen_counts(candidates, training_bigrams),
        word_repeat=word_repeat_counts(candidates),
        mean_d_sem=mean_d_sem,
        response_count=len(candidates),
    )
