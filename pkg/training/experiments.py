"""
Experiments - Log-scale alpha sweep and the initialization x loss grid
"""

import logging
from typing import Dict, List, Optional, Sequence

import numpy as np

from core.config import TrainingConfig
from core.errors import ContractError
from training.trainer import PreparedData, RunRecord, train

logger = logging.getLogger(__name__)


def alpha_grid(lo_exp: float = -2.0, hi_exp: float = 2.0, num: int = 5) -> List[float]:
    """alpha values spaced evenly in log10 between 10**lo_exp and 10**hi_exp."""
    if num < 1:
        raise ContractError("num must be >= 1")
    return [float(a) for a in np.logspace(lo_exp, hi_exp, num)]


def experiment_name(config: TrainingConfig) -> str:
    return f"alpha_{config.alpha:g}_init_{config.init_mode}_pdrop_{config.p_drop:g}"


def run_experiments(base: TrainingConfig, variants: Sequence[Dict], data: PreparedData,
                    out_dir: Optional[str] = None) -> Dict[str, List[RunRecord]]:
    """Train every variant (a dict of config overrides) over all seeds, keyed by experiment name."""
    results: Dict[str, List[RunRecord]] = {}
    for overrides in variants:
        config = base.replace(**overrides).validate()
        name = experiment_name(config)
        logger.info(f"Experiment {name}")
        results[name] = train(config, data, f"{out_dir}/{name}" if out_dir else None)
    return results


def alpha_sweep(base: TrainingConfig, data: PreparedData, alphas: Optional[Sequence[float]] = None,
                out_dir: Optional[str] = None) -> Dict[str, List[RunRecord]]:
    """The MLE-only baseline plus one experiment per alpha."""
    alphas = alpha_grid() if alphas is None else list(alphas)
    return run_experiments(base, [{"alpha": 0.0}] + [{"alpha": a} for a in alphas], data, out_dir)


def init_loss_grid(base: TrainingConfig, data: PreparedData,
                   out_dir: Optional[str] = None) -> Dict[str, List[RunRecord]]:
    """
    Random vs table initialization, crossed with L_MLE alone vs L_MLE + alpha * L_SEM.

    The semantic cells use base.alpha (0.1 when base.alpha is 0).
    """
    alpha = base.alpha if base.alpha > 0 else 0.1
    variants = [
        {"init_mode": init_mode, "alpha": a}
        for init_mode in ("random", "from-table")
        for a in (0.0, alpha)
    ]
    return run_experiments(base, variants, data, out_dir)
