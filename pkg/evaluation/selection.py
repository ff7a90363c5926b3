"""
Selection - Pick one run out of a multi-seed sweep
"""

import logging
from typing import Optional, Sequence

from core.errors import ContractError

logger = logging.getLogger(__name__)

CRITERIA = ("best-bleu", "distinct2-early-saturation")
SATURATION_FRACTION = 0.98


def saturation_step(steps: Sequence[int], values: Sequence[float],
                    fraction: float = SATURATION_FRACTION) -> Optional[int]:
    """First step at which the series reaches fraction x its own maximum."""
    if not values:
        return None
    threshold = fraction * max(values)
    for step, value in zip(steps, values):
        if value >= threshold:
            return step
    return None


def select_run(records: Sequence, criterion: str = "best-bleu"):
    """
    Choose one RunRecord.

    best-bleu: highest final BLEU. distinct2-early-saturation: the run whose distinct-2
    series first reaches 98% of its own maximum at the earliest step. Ties go to the
    earlier record; runs without evaluations are never preferred.
    """
    if not records:
        raise ContractError("select_run needs at least one record")
    if criterion not in CRITERIA:
        raise ContractError(f"unknown criterion {criterion!r}; expected one of {CRITERIA}")

    def key(position: int):
        record = records[position]
        if criterion == "best-bleu":
            final = record.final_metrics()
            return (-(final.bleu if final is not None else float("-inf")), position)
        steps, values = record.metric_series("distinct2")
        first = saturation_step(steps, values)
        return (first if first is not None else float("inf"), position)

    chosen = min(range(len(records)), key=key)
    logger.info(f"Selected seed {records[chosen].seed} by {criterion}")
    return records[chosen]
