"""Error types raised across the CDL pipeline."""

from typing import Any, Dict, List, Optional


class CDLError(Exception):
    """Base class for all pipeline errors."""


class CorpusFormatError(CDLError, ValueError):
    """A corpus line could not be parsed."""

    def __init__(self, message: str, line_number: Optional[int] = None):
        self.line_number = line_number
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)


class EmotionLabelError(CDLError, ValueError):
    """An emotion name is not one of the six categories."""


class LexiconError(CDLError, ValueError):
    """Emotion lexicon violates the disjointness rule."""


class ConfigError(CDLError, ValueError):
    """Run configuration failed validation."""

    def __init__(self, message: str, locations: Optional[List[str]] = None):
        self.locations = locations or []
        super().__init__(message)


class CheckpointError(CDLError, RuntimeError):
    """Checkpoint missing, unreadable or corrupted."""


class CheckpointMismatchError(CheckpointError):
    """Checkpoint was written for another config or vocabulary."""


class TrainingDivergedError(CDLError, RuntimeError):
    """Loss became non-finite."""

    def __init__(self, message: str, diagnostics: Optional[Dict[str, Any]] = None):
        self.diagnostics = diagnostics or {}
        super().__init__(f"{message} {self.diagnostics}" if self.diagnostics else message)


class TrainingCollapseError(TrainingDivergedError):
    """Teacher-forcing NLL drifted past the collapse threshold."""
