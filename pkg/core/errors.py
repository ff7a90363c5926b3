"""
Errors - Exception hierarchy shared by every package of the toolkit
"""

from typing import Iterable, List, Optional, Sequence, Tuple


class ToolkitError(Exception):
    """Base class for all toolkit errors."""


class DimensionError(ToolkitError, ValueError):
    """Raised when an op receives inputs with incompatible shapes."""

    def __init__(self, op_kind: str, shapes: Sequence[Tuple[int, ...]], detail: str = ""):
        self.op_kind = op_kind
        self.shapes = [tuple(s) for s in shapes]
        message = f"{op_kind}: incompatible shapes {self.shapes}"
        if detail:
            message += f" ({detail})"
        super().__init__(message)


class ContractError(ToolkitError, ValueError):
    """Raised when a caller violates an operation's precondition."""


class NumericalError(ToolkitError, ArithmeticError):
    """Raised when an op produces NaN or infinite values."""

    def __init__(self, op_kind: str):
        self.op_kind = op_kind
        super().__init__(f"{op_kind}: produced a non-finite value")


class TrainingDivergenceError(ToolkitError):
    """Raised when training produces non-finite gradients or losses, or the loss explodes."""

    def __init__(self, message: str, param_name: Optional[str] = None,
                 step: Optional[int] = None, record=None):
        self.param_name = param_name
        self.step = step
        self.record = record
        super().__init__(message)


class SamplingError(ToolkitError, ValueError):
    """Raised when a categorical distribution cannot be sampled from."""


class CorpusParseError(ToolkitError, ValueError):
    """Raised when a corpus line cannot be parsed."""

    def __init__(self, line_number: int, reason: str):
        self.line_number = line_number
        super().__init__(f"line {line_number}: {reason}")


class EmptyCorpusError(ToolkitError, ValueError):
    """Raised when a corpus file holds no dialogues."""


class EmbeddingFormatError(ToolkitError, ValueError):
    """Raised when a word-vector file is malformed."""

    def __init__(self, line_number: int, reason: str):
        self.line_number = line_number
        super().__init__(f"line {line_number}: {reason}")


class ConfigError(ToolkitError, ValueError):
    """Raised when a configuration holds invalid or unknown keys."""

    def __init__(self, problems: Iterable[Tuple[str, str]]):
        self.problems: List[Tuple[str, str]] = list(problems)
        self.keys = [key for key, _ in self.problems]
        details = "; ".join(f"{key}: {reason}" for key, reason in self.problems)
        super().__init__(f"invalid configuration ({details})")


class IncompatibleCheckpointError(ToolkitError):
    """Raised when a checkpoint does not match the vocabulary it is used with."""
