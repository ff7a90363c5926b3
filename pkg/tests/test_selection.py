import pytest

from core.errors import ContractError
from evaluation.selection import saturation_step, select_run

from helpers import make_record


def test_single_record_is_selected_by_either_criterion():
    record = make_record(1, [(100, 0.2, 0.3)])
    assert select_run([record], "best-bleu") is record
    assert select_run([record], "distinct2-early-saturation") is record


def test_best_final_bleu():
    records = [make_record(seed, [(100, 0.5, 0.1), (200, bleu, 0.1)])
               for seed, bleu in zip((1, 2, 3), (0.10, 0.12, 0.11))]
    assert select_run(records, "best-bleu").seed == 2


def test_bleu_tie_goes_to_earlier_record():
    records = [make_record(seed, [(100, 0.3, 0.1)]) for seed in (4, 5)]
    assert select_run(records).seed == 4


def test_earliest_saturation():
    slow = make_record(1, [(100, 0.0, 0.1), (200, 0.0, 0.2), (300, 0.0, 0.5)])
    fast = make_record(2, [(100, 0.0, 0.5), (200, 0.0, 0.5), (300, 0.0, 0.5)])
    assert select_run([slow, fast], "distinct2-early-saturation").seed == 2


def test_saturation_step():
    assert saturation_step([100, 200, 300], [0.1, 0.495, 0.5]) == 200
    assert saturation_step([100, 200], [0.4, 0.1]) == 100
    assert saturation_step([], []) is None


def test_runs_without_evaluations_lose():
    empty = make_record(1, [])
    evaluated = make_record(2, [(100, 0.0, 0.1)])
    assert select_run([empty, evaluated], "best-bleu").seed == 2
    assert select_run([empty, evaluated], "distinct2-early-saturation").seed == 2


def test_bad_input():
    with pytest.raises(ContractError):
        select_run([])
    with pytest.raises(ContractError):
        select_run([make_record(1, [(1, 0.0, 0.0)])], "lowest-loss")
