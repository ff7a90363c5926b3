import numpy as np
import pytest

from core.config import TrainingConfig
from dialogue.corpus import load_corpus
from dialogue.embeddings import load_embeddings
from dialogue.synthetic import make_synthetic
from training.experiments import alpha_grid, alpha_sweep, experiment_name, init_loss_grid
from training.trainer import prepare_data, train


def test_alpha_grid_is_log_spaced():
    assert alpha_grid() == pytest.approx([0.01, 0.1, 1.0, 10.0, 100.0])
    assert alpha_grid(-1, 1, 3) == pytest.approx([0.1, 1.0, 10.0])
    with pytest.raises(ValueError):
        alpha_grid(num=0)


def test_experiment_names():
    assert experiment_name(TrainingConfig(alpha=0.1)) == "alpha_0.1_init_random_pdrop_0"
    assert experiment_name(TrainingConfig(alpha=0.0, init_mode="from-table", p_drop=0.25)) == \
        "alpha_0_init_from-table_pdrop_0.25"


@pytest.fixture
def small(corpus_writer, tiny_table):
    dialogues = [(f"d{i}", [("user", "a b"), ("agent", "c a"), ("user", "hello"), ("agent", "b")])
                 for i in range(6)]
    config = TrainingConfig(hidden_size=4, embedding_size=2, batch_size=4, epochs=1, seeds=[1],
                            eval_every=50, max_len=4, valid_ratio=0.3)
    loaded, _ = load_corpus(corpus_writer(dialogues))
    return config, prepare_data(config, loaded, tiny_table)


def test_alpha_sweep_always_includes_the_baseline(small, tmp_path):
    config, data = small
    results = alpha_sweep(config, data, [0.5], str(tmp_path))
    assert list(results) == ["alpha_0_init_random_pdrop_0", "alpha_0.5_init_random_pdrop_0"]
    assert (tmp_path / "alpha_0.5_init_random_pdrop_0" / "seed_1" / "checkpoint.json").exists()


def test_init_loss_grid_has_four_cells(small):
    config, data = small
    results = init_loss_grid(config.replace(alpha=0.0), data)
    assert sorted(results) == sorted([
        "alpha_0_init_random_pdrop_0", "alpha_0.1_init_random_pdrop_0",
        "alpha_0_init_from-table_pdrop_0", "alpha_0.1_init_from-table_pdrop_0",
    ])
    assert all(len(records) == 1 for records in results.values())


@pytest.fixture(scope="module")
def synthetic_run(tmp_path_factory):
    root = tmp_path_factory.mktemp("synthetic")
    corpus, vectors = make_synthetic(str(root), dialogues=250, dim=50)
    config = TrainingConfig(hidden_size=32, embedding_size=50, batch_size=16, epochs=4, seeds=[1, 2, 3],
                            eval_every=50, eval_max_pairs=120, max_len=16, context_cap=48,
                            init_mode="from-table", workers=3)
    dialogues, _ = load_corpus(str(corpus))
    return config, prepare_data(config, dialogues, load_embeddings(str(vectors)))


def _final(records, column):
    return np.array([r.metric_series(column)[1][-1] for r in records])


@pytest.mark.slow
def test_semantic_loss_raises_diversity_and_unseen_bigrams(synthetic_run):
    config, data = synthetic_run
    mle = train(config.replace(alpha=0.0), data)
    semantic = train(config.replace(alpha=0.1), data)
    assert not any(r.diverged for r in mle + semantic)

    mle_distinct, sem_distinct = _final(mle, "distinct2"), _final(semantic, "distinct2")
    assert sem_distinct.mean() > mle_distinct.mean()
    assert (sem_distinct > mle_distinct).sum() >= 2

    mle_unseen, sem_unseen = _final(mle, "unseen_frac"), _final(semantic, "unseen_frac")
    assert sem_unseen.mean() > 0.0
    assert sem_unseen.mean() > mle_unseen.mean()


@pytest.mark.slow
def test_vocabulary_masking_finds_more_unseen_bigrams(synthetic_run):
    config, data = synthetic_run
    plain = train(config.replace(alpha=0.1, p_drop=0.0), data)
    masked = train(config.replace(alpha=0.1, p_drop=0.3), data)
    assert not any(r.diverged for r in plain + masked)

    wins = 0
    for a, b in zip(plain, masked):
        steps, plain_unseen = a.metric_series("unseen_frac")
        assert b.metric_series("unseen_frac")[0] == steps
        wins += np.mean(b.metric_series("unseen_frac")[1]) > np.mean(plain_unseen)
    assert wins >= 2
