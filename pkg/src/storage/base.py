"""Abstract checkpoint store interface."""

from abc import ABC, abstractmethod
from typing import Any, Dict, List, Tuple


class CheckpointStore(ABC):
    """Abstract checkpoint store: a tensor state blob plus a JSON metadata sidecar per name."""

    @abstractmethod
    def save(self, name: str, state: Dict[str, Any], metadata: Dict[str, Any]) -> str:
        """Persist state and metadata; return the blob location."""
        pass

    @abstractmethod
    def load(self, name: str) -> Tuple[Dict[str, Any], Dict[str, Any]]:
        """Return (state, metadata); raise CheckpointError if missing or corrupted."""
        pass

    @abstractmethod
    def list(self, prefix: str = "") -> List[str]:
        """List checkpoint names with optional prefix filter."""
        pass

    @abstractmethod
    def delete(self, name: str) -> bool:
        """Delete checkpoint."""
        pass

    @abstractmethod
    def exists(self, name: str) -> bool:
        """Check if checkpoint exists."""
        pass
