"""
Objectives - NLL, the semantic REINFORCE loss with a moving-window baseline, and their sum
"""

from collections import deque
from dataclasses import asdict, dataclass
from typing import Deque, Dict, Iterable, List, Optional, Sequence, Tuple

from core.autograd import Node, add, average, scale, total
from core.errors import ConfigError, ContractError
from dialogue.embeddings import EmbeddingTable, semantic_distance


class RewardBaseline:
    """Mean of the last `window` rewards; 0 while empty."""

    def __init__(self, window: int = 20, initial: Iterable[float] = ()):
        if window < 1:
            raise ContractError("baseline window must be >= 1")
        self.window = window
        self.rewards: Deque[float] = deque(initial, maxlen=window)

    @property
    def value(self) -> float:
        return sum(self.rewards) / len(self.rewards) if self.rewards else 0.0

    def update(self, reward: float):
        self.rewards.append(float(reward))

    def __len__(self) -> int:
        return len(self.rewards)


@dataclass
class SemanticTerm:
    """Scalars of one sampled response's semantic loss."""

    d_sem: float
    reward: float
    advantage: float
    loss: float


@dataclass
class LossBreakdown:
    mle_loss: float
    sem_loss: float
    d_sem: float
    advantage: float
    alpha: float
    total: float

    def to_row(self, step: int) -> Dict[str, float]:
        return {"step": step, **asdict(self)}


def sequence_nll(logprobs: Sequence[Node]) -> Node:
    """-sum_t log P(w_t) for one sequence."""
    return scale(total(logprobs), -1.0)


def nll_loss(batch_logprobs: Sequence[Sequence[Node]]) -> Node:
    """Per-sequence negative log-likelihood sums, averaged over the batch."""
    return average([sequence_nll(lps) for lps in batch_logprobs])


def semantic_loss(sampled_logprobs: Sequence[Node], sampled_tokens: Sequence[str],
                  target_tokens: Sequence[str], table: EmbeddingTable,
                  baseline: RewardBaseline) -> Tuple[Node, SemanticTerm, RewardBaseline]:
    """
    REINFORCE loss -(R - r(b)) * sum_t log P(w_t) with reward R = -d_SEM.

    The advantage is a constant: no gradient flows through it. The baseline is read
    before and updated with R after.
    """
    d_sem = semantic_distance(sampled_tokens, target_tokens, table)
    reward = -d_sem
    advantage = reward - baseline.value
    node = scale(total(sampled_logprobs), -advantage)
    baseline.update(reward)
    return node, SemanticTerm(d_sem, reward, advantage, node.item()), baseline


def batch_semantic_loss(samples: Sequence[Tuple[Sequence[Node], Sequence[str], Sequence[str]]],
                        table: EmbeddingTable,
                        baseline: RewardBaseline) -> Tuple[Node, List[SemanticTerm]]:
    """Semantic losses of a batch in order, averaged; the baseline updates after each one."""
    nodes, terms = [], []
    for logprobs, sampled_tokens, target_tokens in samples:
        node, term, baseline = semantic_loss(logprobs, sampled_tokens, target_tokens, table, baseline)
        nodes.append(node)
        terms.append(term)
    return average(nodes), terms


def combined_loss(mle: Node, sem: Optional[Node], alpha: float,
                  terms: Sequence[SemanticTerm] = ()) -> Tuple[Node, LossBreakdown]:
    """
    L_Train = L_MLE + alpha * L_SEM.

    With alpha == 0 (or no semantic node) the total is the MLE node itself.
    """
    if alpha < 0:
        raise ConfigError([("alpha", "alpha must be >= 0")])

    mle_value = mle.item()
    d_sem = sum(t.d_sem for t in terms) / len(terms) if terms else 0.0
    advantage = sum(t.advantage for t in terms) / len(terms) if terms else 0.0

    if sem is None or alpha == 0:
        sem_value = sem.item() if sem is not None else 0.0
        return mle, LossBreakdown(mle_value, sem_value, d_sem, advantage, alpha, mle_value)

    total_node = add(mle, scale(sem, alpha))
    sem_value = sem.item()
    return total_node, LossBreakdown(mle_value, sem_value, d_sem, advantage, alpha, total_node.item())
