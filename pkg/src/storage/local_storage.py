"""Local file system checkpoint store."""

import hashlib
import io
import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Tuple

import torch

from ..exceptions import CheckpointError
from .base import CheckpointStore

logger = logging.getLogger(__name__)

BLOB_SUFFIX = ".pt"
SIDECAR_SUFFIX = ".json"


def _sha256(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


class LocalCheckpointStore(CheckpointStore):
    """Checkpoints as <name>.pt next to <name>.json under a base directory."""

    def __init__(self, base_path: Path):
        self.base_path = Path(base_path)
        self.base_path.mkdir(parents=True, exist_ok=True)

    def _paths(self, name: str) -> Tuple[Path, Path]:
        return self.base_path / f"{name}{BLOB_SUFFIX}", self.base_path / f"{name}{SIDECAR_SUFFIX}"

    def save(self, name: str, state: Dict[str, Any], metadata: Dict[str, Any]) -> str:
        """Serialize state with torch.save and write the sidecar with the blob hash."""
        blob_path, sidecar_path = self._paths(name)
        blob_path.parent.mkdir(parents=True, exist_ok=True)

        buffer = io.BytesIO()
        torch.save(state, buffer)
        data = buffer.getvalue()
        blob_path.write_bytes(data)

        sidecar = dict(metadata)
        sidecar["sha256"] = _sha256(data)
        sidecar_path.write_text(json.dumps(sidecar, indent=2, sort_keys=True, default=str), encoding="utf-8")
        logger.info(f"Saved checkpoint: {blob_path}")
        return str(blob_path)

    def load(self, name: str) -> Tuple[Dict[str, Any], Dict[str, Any]]:
        """Load and integrity-check a checkpoint."""
        blob_path, sidecar_path = self._paths(name)
        if not blob_path.exists():
            raise CheckpointError(f"Checkpoint not found: expected {blob_path}")
        if not sidecar_path.exists():
            raise CheckpointError(f"Checkpoint metadata not found: expected {sidecar_path}")

        try:
            metadata = json.loads(sidecar_path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as e:
            raise CheckpointError(f"Checkpoint metadata {sidecar_path} is not valid JSON: {e}") from e

        data = blob_path.read_bytes()
        expected = metadata.get("sha256")
        if expected is not None and _sha256(data) != expected:
            raise CheckpointError(f"Checkpoint {blob_path} failed integrity check (sha256 mismatch)")

        try:
            state = torch.load(io.BytesIO(data), map_location="cpu", weights_only=True)
        except Exception as e:
            raise CheckpointError(f"Checkpoint {blob_path} could not be read: {e}") from e

        logger.info(f"Loaded checkpoint: {blob_path}")
        return state, metadata

    def list(self, prefix: str = "") -> List[str]:
        """List checkpoint names matching prefix."""
        names = []
        for blob in sorted(self.base_path.rglob(f"*{BLOB_SUFFIX}")):
            name = blob.relative_to(self.base_path).as_posix()[: -len(BLOB_SUFFIX)]
            if name.startswith(prefix):
                names.append(name)
        return names

    def delete(self, name: str) -> bool:
        """Delete checkpoint blob and sidecar."""
        deleted = False
        for path in self._paths(name):
            if path.exists():
                path.unlink()
                deleted = True
        if deleted:
            logger.info(f"Deleted checkpoint: {name}")
        return deleted

    def exists(self, name: str) -> bool:
        """Check if checkpoint exists."""
        blob_path, sidecar_path = self._paths(name)
        return blob_path.exists() and sidecar_path.exists()
