"""
Optimizer - Bias-corrected Adam over named float64 parameters
"""

import logging
from dataclasses import dataclass, field
from typing import Dict

import numpy as np

from core.errors import DimensionError, TrainingDivergenceError

logger = logging.getLogger(__name__)


@dataclass
class AdamState:
    """Adam hyperparameters plus per-parameter moments."""

    learning_rate: float = 4e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    step_count: int = 0
    first_moment: Dict[str, np.ndarray] = field(default_factory=dict)
    second_moment: Dict[str, np.ndarray] = field(default_factory=dict)

    def to_dict(self) -> Dict:
        return {
            "learning_rate": self.learning_rate,
            "beta1": self.beta1,
            "beta2": self.beta2,
            "epsilon": self.epsilon,
            "step_count": self.step_count,
        }


def adam_step(params: Dict[str, np.ndarray], grads: Dict[str, np.ndarray],
              state: AdamState) -> Dict[str, np.ndarray]:
    """
    Apply one Adam update in place.

    Every gradient is validated before any parameter moves, so a NaN leaves the
    parameters and the state untouched.

    Returns:
        The updated params dictionary (same arrays, modified in place)
    """
    for name, param in params.items():
        grad = grads.get(name)
        if grad is None:
            continue
        if grad.shape != param.shape:
            raise DimensionError("adam_step", [param.shape, grad.shape], name)
        if not np.all(np.isfinite(grad)):
            raise TrainingDivergenceError(f"non-finite gradient for parameter {name}", param_name=name)

    state.step_count += 1
    t = state.step_count
    correction1 = 1.0 - state.beta1 ** t
    correction2 = 1.0 - state.beta2 ** t

    for name, param in params.items():
        grad = grads.get(name)
        if grad is None:
            continue
        m = state.first_moment.setdefault(name, np.zeros_like(param))
        v = state.second_moment.setdefault(name, np.zeros_like(param))
        m *= state.beta1
        m += (1.0 - state.beta1) * grad
        v *= state.beta2
        v += (1.0 - state.beta2) * grad * grad
        m_hat = m / correction1
        v_hat = v / correction2
        param -= state.learning_rate * m_hat / (np.sqrt(v_hat) + state.epsilon)

    return params
