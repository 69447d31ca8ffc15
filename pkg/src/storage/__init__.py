"""Checkpoint storage abstraction module."""

from .base import CheckpointStore
from .local_storage import LocalCheckpointStore

__all__ = ["CheckpointStore", "LocalCheckpointStore"]
