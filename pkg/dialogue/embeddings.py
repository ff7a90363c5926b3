"""
Embeddings - Static word-vector tables, sentence averages and the semantic distance
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple

import numpy as np

from core.errors import DimensionError, EmbeddingFormatError
from core.rng import RngStreams
from dialogue.vocabulary import SPECIAL_TOKENS, Vocabulary

logger = logging.getLogger(__name__)

_SPECIALS = frozenset(SPECIAL_TOKENS)


class EmbeddingTable:
    """Immutable token -> vector map of a single dimension."""

    def __init__(self, dim: int, tokens: Sequence[str], matrix: np.ndarray):
        if matrix.shape != (len(tokens), dim):
            raise DimensionError("embedding_table", [matrix.shape, (len(tokens), dim)],
                                 f"matrix shape {matrix.shape} does not match {len(tokens)} x {dim}")
        self.dim = dim
        self.index: Dict[str, int] = {tok: i for i, tok in enumerate(tokens)}
        self.matrix = np.array(matrix, dtype=np.float64)
        self.matrix.setflags(write=False)

    def __len__(self) -> int:
        return len(self.index)

    def __contains__(self, token: str) -> bool:
        return token in self.index

    def vector(self, token: str) -> Optional[np.ndarray]:
        row = self.index.get(token)
        return None if row is None else self.matrix[row]

    @classmethod
    def from_dict(cls, vectors: Dict[str, Sequence[float]]) -> "EmbeddingTable":
        tokens = list(vectors)
        matrix = np.array([vectors[t] for t in tokens], dtype=np.float64)
        dim = matrix.shape[1] if matrix.ndim == 2 else 0
        return cls(dim, tokens, matrix.reshape(len(tokens), dim))


@dataclass
class SentenceEmbedding:
    vector: np.ndarray
    covered_count: int
    total_count: int


@dataclass
class CoverageReport:
    """How many vocabulary rows came from the table."""

    covered: int = 0
    total: int = 0
    projected: bool = False
    missing: List[str] = field(default_factory=list)

    @property
    def coverage(self) -> float:
        return self.covered / self.total if self.total else 0.0


def _is_header(fields: List[str]) -> bool:
    return len(fields) == 2 and all(f.isdigit() for f in fields)


def load_embeddings(path: str, vocabulary_filter: Optional[Iterable[str]] = None) -> EmbeddingTable:
    """
    Load a GloVe/fastText style text file: "token v1 ... vd" per line.

    An optional "count dim" header line is skipped. With a filter, only its tokens are kept.
    """
    keep: Optional[Set[str]] = set(vocabulary_filter) if vocabulary_filter is not None else None
    tokens: List[str] = []
    rows: List[np.ndarray] = []
    dim: Optional[int] = None

    with open(path, "r", encoding="utf-8") as f:
        for line_number, line in enumerate(f, start=1):
            fields = line.rstrip("\n").split()
            if not fields:
                continue
            if line_number == 1 and _is_header(fields):
                continue
            if len(fields) < 2:
                raise EmbeddingFormatError(line_number, "expected a token followed by its vector")
            if dim is None:
                dim = len(fields) - 1
            elif len(fields) - 1 != dim:
                raise EmbeddingFormatError(line_number, f"expected {dim} values, found {len(fields) - 1}")

            token = fields[0]
            if keep is not None and token not in keep:
                continue
            try:
                values = np.array([float(v) for v in fields[1:]], dtype=np.float64)
            except ValueError as e:
                raise EmbeddingFormatError(line_number, f"unparsable real ({e})") from None
            if not np.all(np.isfinite(values)):
                raise EmbeddingFormatError(line_number, "non-finite value")
            tokens.append(token)
            rows.append(values)

    if dim is None:
        raise EmbeddingFormatError(1, "file holds no vectors")
    matrix = np.vstack(rows) if rows else np.zeros((0, dim))
    logger.info(f"Embeddings loaded: {path} ({len(tokens)} vectors, dim={dim})")
    return EmbeddingTable(dim, tokens, matrix)


def sentence_embedding(tokens: Iterable[str], table: EmbeddingTable) -> SentenceEmbedding:
    """
    Mean of the in-table, non-special vectors.

    Special and out-of-table tokens are skipped but still count toward total_count.
    """
    rows = []
    considered = specials = 0
    for token in tokens:
        considered += 1
        if token in _SPECIALS:
            specials += 1
            continue
        row = table.index.get(token)
        if row is not None:
            rows.append(row)
    if not rows:
        if considered > specials:
            logger.warning(f"No in-table tokens among {considered}; using the zero vector")
        return SentenceEmbedding(np.zeros(table.dim), 0, considered)
    return SentenceEmbedding(table.matrix[rows].mean(axis=0), len(rows), considered)


def semantic_distance(sampled_tokens: Iterable[str], target_tokens: Iterable[str],
                      table: EmbeddingTable) -> float:
    """L2 distance between the averaged embeddings of two token sequences."""
    sampled = sentence_embedding(sampled_tokens, table).vector
    target = sentence_embedding(target_tokens, table).vector
    return float(np.linalg.norm(sampled - target))


def init_input_embeddings(vocabulary: Vocabulary, table: EmbeddingTable, model_dim: int,
                          streams: RngStreams,
                          base: Optional[np.ndarray] = None) -> Tuple[np.ndarray, CoverageReport]:
    """
    Build a |V| x model_dim input embedding matrix from a word-vector table.

    In-table tokens copy their vector when the dimensions agree; otherwise they are
    mapped through a fixed projection drawn from the projection stream. Other rows
    keep the base matrix (or a standard-normal draw from the init stream).
    """
    if base is None:
        base = streams.init.standard_normal((len(vocabulary), model_dim))
    matrix = np.array(base, dtype=np.float64, copy=True)

    projection = None
    if table.dim != model_dim:
        projection = streams.projection.standard_normal((model_dim, table.dim)) / math.sqrt(table.dim)

    report = CoverageReport(total=len(vocabulary), projected=projection is not None)
    for token_id, token in enumerate(vocabulary.id_to_token):
        vector = table.vector(token)
        if vector is None or token in _SPECIALS:
            report.missing.append(token)
            continue
        matrix[token_id] = vector if projection is None else projection @ vector
        report.covered += 1

    logger.info(f"Input embeddings initialized from table: {report.covered}/{report.total} rows covered"
                + (" (projected)" if report.projected else ""))
    return matrix, report
