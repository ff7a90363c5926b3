"""
Gradient Check - Central finite differences against the autograd engine
"""

import logging
from typing import Callable, Dict

import numpy as np

from core.autograd import Node, backward, zero_grads

logger = logging.getLogger(__name__)


def relative_error(analytic: np.ndarray, numeric: np.ndarray, floor: float = 1e-7) -> float:
    """Largest coordinatewise |a - n| / max(|a|, |n|, floor)."""
    scale = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), floor)
    return float(np.max(np.abs(analytic - numeric) / scale)) if analytic.size else 0.0


def numeric_gradient(loss_fn: Callable[[], Node], param: Node, h: float = 1e-5) -> np.ndarray:
    """Central-difference gradient of loss_fn() with respect to one parameter."""
    grad = np.zeros_like(param.value)
    flat = param.value.reshape(-1)
    for i in range(flat.size):
        original = flat[i]
        flat[i] = original + h
        plus = loss_fn().item()
        flat[i] = original - h
        minus = loss_fn().item()
        flat[i] = original
        grad.reshape(-1)[i] = (plus - minus) / (2.0 * h)
    return grad


def check_gradients(loss_fn: Callable[[], Node], params: Dict[str, Node],
                    h: float = 1e-5, floor: float = 1e-7) -> Dict[str, float]:
    """
    Compare analytic and numeric gradients for every parameter.

    loss_fn must rebuild the graph from the current parameter values on every call.
    floor bounds the denominator of the relative error for near-zero gradients.

    Returns:
        Dictionary mapping parameter names to their max relative error
    """
    zero_grads(params.values())
    analytic = backward(loss_fn())
    errors = {}
    for name, param in params.items():
        numeric = numeric_gradient(loss_fn, param, h)
        errors[name] = relative_error(analytic.get(name, np.zeros_like(param.value)), numeric, floor)
        logger.debug(f"gradcheck {name}: max relative error {errors[name]:.3e}")
    return errors
