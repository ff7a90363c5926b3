"""Response generators; importing the package registers every decoding mode."""

from . import beam_generator, greedy_generator, sample_generator  # noqa: F401
