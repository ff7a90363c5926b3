"""
RNG - Seeded, named, mutually independent random streams

Each stream is a numpy PCG64 generator whose seed sequence is derived from the run
seed and a fixed per-stream spawn key, so drawing from one stream never moves another.
"""

from typing import Dict, Iterable

import numpy as np

from core.errors import SamplingError

# Fixed spawn keys; never renumber, checkpoints and logs depend on them.
STREAM_KEYS: Dict[str, int] = {
    "init": 0,
    "sampling": 1,
    "masking": 2,
    "data": 3,
    "projection": 4,
}


class RngStreams:
    """Named independent generators derived from one run seed."""

    def __init__(self, seed: int, names: Iterable[str] = tuple(STREAM_KEYS)):
        self.seed = int(seed)
        self._streams: Dict[str, np.random.Generator] = {}
        for name in names:
            if name not in STREAM_KEYS:
                raise KeyError(f"unknown stream: {name}")
            sequence = np.random.SeedSequence(self.seed, spawn_key=(STREAM_KEYS[name],))
            self._streams[name] = np.random.Generator(np.random.PCG64(sequence))

    def __getitem__(self, name: str) -> np.random.Generator:
        return self._streams[name]

    @property
    def init(self) -> np.random.Generator:
        return self._streams["init"]

    @property
    def sampling(self) -> np.random.Generator:
        return self._streams["sampling"]

    @property
    def masking(self) -> np.random.Generator:
        return self._streams["masking"]

    @property
    def data(self) -> np.random.Generator:
        return self._streams["data"]

    @property
    def projection(self) -> np.random.Generator:
        return self._streams["projection"]


def sample_categorical(probs: np.ndarray, stream: np.random.Generator) -> int:
    """
    Draw one id from a categorical distribution with a single uniform draw.

    Zero-probability ids are never returned.
    """
    probs = np.asarray(probs, dtype=np.float64).reshape(-1)
    if probs.size == 0 or np.any(probs < 0) or not np.all(np.isfinite(probs)):
        raise SamplingError("probabilities must be finite and non-negative")
    mass = probs.sum()
    if mass <= 0.0:
        raise SamplingError("degenerate distribution: all probabilities are zero")
    if abs(mass - 1.0) > 1e-9:
        raise SamplingError(f"probabilities sum to {mass!r}, expected 1")

    cdf = np.cumsum(probs)
    u = stream.random() * cdf[-1]
    chosen = int(np.searchsorted(cdf, u, side="right"))
    # u can land on cdf[-1] through rounding; fall back to the last positive id
    if chosen >= probs.size or probs[chosen] == 0.0:
        chosen = int(np.flatnonzero(probs)[-1])
    return chosen
