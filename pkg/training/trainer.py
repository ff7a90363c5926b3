"""
Trainer - Epoch loop, periodic evaluation, divergence handling and multi-seed runs
"""

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from core.autograd import Node, backward, zero_grads
from core.config import TrainingConfig
from core.errors import ContractError, EmptyCorpusError, NumericalError, TrainingDivergenceError
from core.optim import AdamState, adam_step
from core.rng import RngStreams
from core.run_manager import RunManager
from core.state_manager import RunStateManager
from dialogue.corpus import (BigramStats, Dialogue, EncodedPair, TrainingPair, bigram_stats,
                             build_pairs, count_unk_substitutions, encode_pair, load_split_ids,
                             split_dialogues, target_sentences)
from dialogue.embeddings import EmbeddingTable, init_input_embeddings
from dialogue.vocabulary import Vocabulary, build_vocab
from evaluation.metrics import MetricsReport, compute_report
from generators.base_generator import ResponseGenerator
from generators.greedy_generator import GreedyGenerator
from models.base_model import Seq2SeqModel
from models.lstm_seq2seq import get_model_class
from training.objectives import (LossBreakdown, RewardBaseline, batch_semantic_loss,
                                 combined_loss, nll_loss)

logger = logging.getLogger(__name__)


@dataclass
class PreparedData:
    """Split, tokenized and id-encoded corpus plus everything derived from the training side."""

    vocab: Vocabulary
    train_pairs: List[TrainingPair]
    valid_pairs: List[TrainingPair]
    train_encoded: List[EncodedPair]
    training_bigrams: BigramStats
    table: Optional[EmbeddingTable] = None


@dataclass
class RunRecord:
    """Everything one seed's run logged, indexed by optimizer step."""

    seed: int
    metrics: List[Tuple[int, MetricsReport]] = field(default_factory=list)
    losses: List[Tuple[int, LossBreakdown]] = field(default_factory=list)
    checkpoint_paths: List[str] = field(default_factory=list)
    diverged_step: Optional[int] = None

    @property
    def diverged(self) -> bool:
        return self.diverged_step is not None

    def final_metrics(self) -> Optional[MetricsReport]:
        return self.metrics[-1][1] if self.metrics else None

    def metric_series(self, column: str) -> Tuple[List[int], List[float]]:
        """Steps and values of one metrics column."""
        rows = [report.to_row(step) for step, report in self.metrics]
        return [row["step"] for row in rows], [row[column] for row in rows]

    def metric_rows(self) -> List[Dict[str, float]]:
        return [report.to_row(step) for step, report in self.metrics]

    def loss_rows(self) -> List[Dict[str, float]]:
        return [breakdown.to_row(step) for step, breakdown in self.losses]


def prepare_data(config: TrainingConfig, dialogues: Sequence[Dialogue],
                 table: Optional[EmbeddingTable] = None,
                 vocab: Optional[Vocabulary] = None) -> PreparedData:
    """Split dialogues, build pairs and (unless given) the vocabulary from training pairs."""
    valid_ids = load_split_ids(config.split_file) if config.split_file else None
    train_dialogues, valid_dialogues = split_dialogues(dialogues, config.valid_ratio, valid_ids)
    train_pairs = build_pairs(train_dialogues, config.context_cap)
    valid_pairs = build_pairs(valid_dialogues, config.context_cap)
    if not train_pairs:
        raise EmptyCorpusError("the training split holds no pairs")

    if vocab is None:
        vocab = build_vocab(train_pairs, config.min_count)
    count_unk_substitutions(train_pairs + valid_pairs, vocab)
    logger.info(f"Data prepared: {len(train_pairs)} training pairs, {len(valid_pairs)} validation pairs, "
                f"vocabulary {len(vocab)}")
    return PreparedData(
        vocab=vocab,
        train_pairs=train_pairs,
        valid_pairs=valid_pairs,
        train_encoded=[encode_pair(p, vocab) for p in train_pairs],
        training_bigrams=bigram_stats(target_sentences(train_pairs)),
        table=table,
    )


def build_model(config: TrainingConfig, data: PreparedData, streams: RngStreams) -> Seq2SeqModel:
    """Initialize a model from the init stream, then from the table when init_mode asks for it."""
    model_class = get_model_class(config.model)
    if model_class is None:
        raise ContractError(f"no model registered for kind: {config.model}")
    model = model_class.initialize(len(data.vocab), config.embedding_size, config.hidden_size, streams.init)

    if config.init_mode == "from-table":
        if data.table is None:
            raise ContractError("init_mode=from-table needs an embedding table")
        embedding = model.parameters()["embedding"]
        matrix, coverage = init_input_embeddings(data.vocab, data.table, config.embedding_size,
                                                 streams, base=embedding.value)
        embedding.value[...] = matrix
        logger.info(f"Embedding coverage {coverage.coverage:.3f}")
    return model


def evaluate(model: Seq2SeqModel, valid_pairs: Sequence[TrainingPair], training_bigrams: BigramStats,
             table: Optional[EmbeddingTable], vocab: Vocabulary, max_len: int = 30,
             generator: Optional[ResponseGenerator] = None) -> MetricsReport:
    """Decode every validation context (greedy by default) and score against the references."""
    if not valid_pairs:
        raise ContractError("cannot evaluate on an empty validation set")
    generator = generator or GreedyGenerator()
    candidates, references = [], []
    for pair in valid_pairs:
        token_ids = generator.decode(model, vocab.encode(pair.context_tokens), max_len)
        candidates.append(vocab.decode(token_ids))
        references.append(target_sentences([pair])[0])
    return compute_report(candidates, references, training_bigrams, table)


class Trainer:
    """
    Runs one seed: shuffled mini-batches, L_MLE (+ alpha * L_SEM), one Adam step per
    batch, evaluation every eval_every steps.

    Batch order draws from the data stream only; response sampling and exploration
    masks draw from the sampling and masking streams only when alpha > 0.
    """

    def __init__(self, config: TrainingConfig, data: PreparedData,
                 run_manager: Optional[RunManager] = None):
        self.config = config
        self.data = data
        self.run_manager = run_manager
        self.logger = logging.getLogger(self.__class__.__name__)

        if config.alpha > 0 and data.table is None:
            raise ContractError("alpha > 0 needs an embedding table")

    def _eval_pairs(self) -> List[TrainingPair]:
        limit = self.config.eval_max_pairs
        return self.data.valid_pairs[:limit] if limit else self.data.valid_pairs

    def batch_loss(self, model: Seq2SeqModel, indices: Sequence[int], streams: RngStreams,
                   baseline: RewardBaseline) -> Tuple[Node, LossBreakdown, float]:
        """L_Train for one batch, plus the mean probability exploration masked off the samples."""
        encoded = [self.data.train_encoded[i] for i in indices]
        mle = nll_loss([model.teacher_forced_logprobs(p.context_ids, p.target_ids) for p in encoded])

        if self.config.alpha == 0:
            return (*combined_loss(mle, None, 0.0), 0.0)

        samples, masked = [], []
        for i, pair in zip(indices, encoded):
            response = model.sample_response(pair.context_ids, self.config.max_len, self.config.p_drop, streams)
            masked.extend(response.masked_mass)
            samples.append((response.logprobs, self.data.vocab.decode(response.token_ids),
                            self.data.train_pairs[i].target_tokens))
        sem, terms = batch_semantic_loss(samples, self.data.table, baseline)
        return (*combined_loss(mle, sem, self.config.alpha, terms), float(np.mean(masked)))

    def run(self, seed: int) -> RunRecord:
        """Train one seed; raises TrainingDivergenceError carrying the partial record on abort."""
        config = self.config
        streams = RngStreams(seed)
        model = build_model(config, self.data, streams)
        params = model.parameters()
        optimizer = AdamState(learning_rate=config.learning_rate)
        state = RunStateManager(config.divergence_window, config.divergence_factor,
                                max_masked_mass=config.max_masked_mass)
        baseline = RewardBaseline(config.baseline_window)
        record = RunRecord(seed=seed)
        run_dir = self.run_manager.run_dir(seed) if self.run_manager else None

        state.save_state(model.to_state_dict())
        self.logger.info(f"Run started: seed={seed} alpha={config.alpha} p_drop={config.p_drop} "
                         f"init={config.init_mode}")

        step = 0
        for epoch in range(config.epochs):
            order = streams.data.permutation(len(self.data.train_encoded))
            for start in range(0, len(order), config.batch_size):
                indices = [int(i) for i in order[start:start + config.batch_size]]
                try:
                    zero_grads(params.values())
                    loss, breakdown, masked_mass = self.batch_loss(model, indices, streams, baseline)
                    grads = backward(loss)
                    adam_step({name: node.value for name, node in params.items()}, grads, optimizer)
                except (NumericalError, TrainingDivergenceError) as e:
                    self._abort(str(e), step + 1, model, state, record, run_dir)

                step += 1
                record.losses.append((step, breakdown))
                state.record_loss(breakdown.total)
                if config.alpha > 0 and config.p_drop > 0:
                    state.record_masked_mass(masked_mass)
                reason = state.divergence_reason()
                if reason:
                    self._abort(reason, step, model, state, record, run_dir)
                state.save_state(model.to_state_dict())

                if step % config.log_every == 0:
                    self.logger.debug(f"seed={seed} epoch={epoch} step={step} mle={breakdown.mle_loss:.4f} "
                                      f"sem={breakdown.sem_loss:.4f} total={breakdown.total:.4f}")
                if step % config.eval_every == 0 and self.data.valid_pairs:
                    self._evaluate(model, step, record)

        if self.data.valid_pairs and (not record.metrics or record.metrics[-1][0] != step):
            self._evaluate(model, step, record)

        if run_dir is not None:
            path = self.run_manager.save_checkpoint(run_dir / "checkpoint.json", model, self.data.vocab,
                                                    config, step)
            record.checkpoint_paths.append(str(path))
        self.logger.info(f"Run finished: seed={seed} steps={step}")
        return record

    def _evaluate(self, model: Seq2SeqModel, step: int, record: RunRecord):
        report = evaluate(model, self._eval_pairs(), self.data.training_bigrams, self.data.table,
                          self.data.vocab, self.config.max_len)
        record.metrics.append((step, report))
        self.logger.info(f"seed={record.seed} step={step} bleu={report.bleu:.4f} "
                         f"distinct2={report.distinct2.value:.4f} unseen={report.unseen.value:.4f}")

    def _abort(self, reason: str, step: int, model: Seq2SeqModel, state: RunStateManager,
               record: RunRecord, run_dir: Optional[Path]):
        record.diverged_step = step
        snapshot = state.last_good()
        if run_dir is not None and snapshot is not None:
            path = self.run_manager.save_checkpoint(run_dir / "checkpoint_last_good.json", model,
                                                    self.data.vocab, self.config, snapshot["step"],
                                                    state_dict=snapshot["params"])
            record.checkpoint_paths.append(str(path))
        self.logger.error(f"Run diverged: seed={record.seed} step={step}: {reason}")
        raise TrainingDivergenceError(reason, step=step, record=record)


def train_run(config: TrainingConfig, seed: int, data: PreparedData,
              run_manager: Optional[RunManager] = None) -> RunRecord:
    return Trainer(config, data, run_manager).run(seed)


def _run_seed(config: TrainingConfig, seed: int, data: PreparedData, out_dir: Optional[str]) -> RunRecord:
    """Worker entry: a diverged run comes back as its partial record."""
    run_manager = RunManager(out_dir) if out_dir else None
    try:
        return train_run(config, seed, data, run_manager)
    except TrainingDivergenceError as e:
        return e.record


def train(config: TrainingConfig, data: PreparedData, out_dir: Optional[str] = None) -> List[RunRecord]:
    """
    Train every configured seed and return one RunRecord each, in seed order.

    Seeds run in independent worker processes when config.workers > 1. Diverged
    runs are returned with diverged_step set.
    """
    config.validate()
    seeds = list(config.seeds)
    if config.workers > 1 and len(seeds) > 1:
        with ProcessPoolExecutor(max_workers=min(config.workers, len(seeds))) as pool:
            records = list(pool.map(_run_seed, [config] * len(seeds), seeds,
                                    [data] * len(seeds), [out_dir] * len(seeds)))
    else:
        records = [_run_seed(config, seed, data, out_dir) for seed in seeds]

    diverged = [r.seed for r in records if r.diverged]
    if diverged:
        logger.warning(f"Diverged seeds: {diverged}")
    return records
