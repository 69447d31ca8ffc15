"""JSON-lines training trace."""

import json
import logging
import threading
from pathlib import Path
from typing import Any, Dict, List, Optional

logger = logging.getLogger(__name__)


class TrainingLog:
    """Append-only JSON-lines sink; one object per line, flushed per write."""

    def __init__(self, path: Optional[Path] = None, append: bool = False):
        self.path = Path(path) if path is not None else None
        self.records: List[Dict[str, Any]] = []
        self._lock = threading.Lock()
        self._handle = None
        if self.path is not None:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            self._handle = self.path.open("a" if append else "w", encoding="utf-8")

    def write(self, record: Dict[str, Any]) -> None:
        line = json.dumps(record, sort_keys=True, default=float)
        with self._lock:
            self.records.append(record)
            if self._handle is not None:
                self._handle.write(line + "\n")
                self._handle.flush()

    def close(self) -> None:
        with self._lock:
            if self._handle is not None:
                self._handle.close()
                self._handle = None

    def __enter__(self) -> "TrainingLog":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def read_log(path: Path) -> List[Dict[str, Any]]:
    """Parse a JSON-lines log back into records."""
    with Path(path).open(encoding="utf-8") as f:
        return [json.loads(line) for line in f if line.strip()]
