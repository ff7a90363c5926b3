"""
State Manager - Logging setup and the mutable state of one training run
"""

import copy
import logging
import math
import os
from collections import deque
from datetime import datetime
from typing import Deque, Dict, List, Optional

import numpy as np


def setup_logging(log_dir: Optional[str] = None, level: int = logging.INFO):
    """Setup logging configuration."""
    if log_dir is None:
        log_dir = os.path.join(os.path.dirname(os.path.dirname(__file__)), "logs")
    os.makedirs(log_dir, exist_ok=True)

    logging.basicConfig(
        level=level,
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        handlers=[
            logging.FileHandler(os.path.join(log_dir, f"toolkit_{datetime.now().strftime('%Y%m%d')}.log")),
            logging.StreamHandler()
        ],
        force=True
    )


class RunStateManager:
    """
    Tracks the running state of a training run.

    Keeps a bounded history of last-good parameter snapshots (restored when a run
    diverges) plus the loss and masked-probability windows the divergence detector reads.
    """

    def __init__(self, divergence_window: int = 100, divergence_factor: float = 10.0,
                 max_snapshots: int = 3, max_masked_mass: float = 0.5):
        self.logger = logging.getLogger(self.__class__.__name__)

        self.step: int = 0
        self.divergence_window = divergence_window
        self.divergence_factor = divergence_factor

        # Loss history: the last 2 * window losses, enough to compare two windows
        self.loss_history: Deque[float] = deque(maxlen=2 * divergence_window)

        # Mean masked probability per batch of sampled responses
        self.max_masked_mass = max_masked_mass
        self.masked_mass_history: Deque[float] = deque(maxlen=divergence_window)

        # Snapshot stack of last-good parameters
        self.snapshots: List[Dict[str, object]] = []
        self.max_snapshots: int = max_snapshots

    def save_state(self, params: Dict[str, np.ndarray]):
        """Save a snapshot of parameters known to be good."""
        self.snapshots.append({"step": self.step, "params": copy.deepcopy(params)})
        if len(self.snapshots) > self.max_snapshots:
            self.snapshots.pop(0)
        self.logger.debug(f"Snapshot saved at step {self.step}")

    def last_good(self) -> Optional[Dict[str, object]]:
        """Get the most recent good snapshot, if any."""
        return self.snapshots[-1] if self.snapshots else None

    def record_loss(self, loss: float):
        """Append a step loss and advance the step counter."""
        self.step += 1
        self.loss_history.append(loss)

    def record_masked_mass(self, mass: float):
        """Append the mean masked probability of one batch of sampled responses."""
        self.masked_mass_history.append(mass)

    def divergence_reason(self) -> Optional[str]:
        """
        Check the loss history for divergence.

        Returns a reason string on a non-finite loss, when the mean of the latest
        window exceeds divergence_factor times the mean of the window before it, or
        when over a full window the exploration masks removed more than
        max_masked_mass of the model's own probability on average: the sampled
        responses are then mostly noise the model would not produce.
        """
        if not self.loss_history:
            return None
        latest = self.loss_history[-1]
        if not math.isfinite(latest):
            return f"non-finite loss at step {self.step}"

        masked = self.masked_mass_history
        if len(masked) == masked.maxlen:
            mean_masked = float(np.mean(masked))
            if mean_masked > self.max_masked_mass:
                return (f"exploration masks removed {mean_masked:.3f} of the sampling probability "
                        f"over {len(masked)} steps (step {self.step})")

        window = self.divergence_window
        if len(self.loss_history) < 2 * window:
            return None
        history = list(self.loss_history)
        previous = float(np.mean(history[:window]))
        current = float(np.mean(history[window:]))
        if previous > 0 and current > self.divergence_factor * previous:
            return (f"loss rose from {previous:.4f} to {current:.4f} "
                    f"over {window} steps (step {self.step})")
        return None
