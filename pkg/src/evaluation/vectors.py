"""Word vectors for the embedding metrics."""

import logging
from pathlib import Path
from typing import Dict, Iterable, Optional

import numpy as np

from ..corpus.vocabulary import Vocabulary
from ..modeling.ecm import ECMModel

logger = logging.getLogger(__name__)


class WordVectors:
    """Token to vector lookup with a fixed dimension; unknown tokens are skipped."""

    def __init__(self, vectors: Dict[str, np.ndarray], source: str):
        dims = {v.shape for v in vectors.values()}
        if len(dims) > 1:
            raise ValueError(f"Word vectors have mixed dimensions: {sorted(d[0] for d in dims)}")
        self.vectors = {token: np.asarray(v, dtype=np.float64) for token, v in vectors.items()}
        self.dim = next(iter(dims))[0] if dims else 0
        self.source = source

    def __len__(self) -> int:
        return len(self.vectors)

    def __contains__(self, token: str) -> bool:
        return token in self.vectors

    def matrix(self, tokens: Iterable[str]) -> Optional[np.ndarray]:
        """Stacked vectors of the known tokens, or None if there are none."""
        rows = [self.vectors[t] for t in tokens if t in self.vectors]
        return np.stack(rows) if rows else None

    @classmethod
    def from_text_file(cls, path: Path) -> "WordVectors":
        """
        Load "token v1 v2 ..." lines; a leading "count dim" header line is skipped.
        """
        vectors: Dict[str, np.ndarray] = {}
        with Path(path).open(encoding="utf-8") as f:
            for line_number, line in enumerate(f, 1):
                fields = line.rstrip().split(" ")
                if line_number == 1 and len(fields) == 2 and all(p.isdigit() for p in fields):
                    continue
                if len(fields) < 2:
                    continue
                try:
                    vectors[fields[0]] = np.array([float(x) for x in fields[1:]])
                except ValueError:
                    raise ValueError(f"line {line_number}: malformed vector for {fields[0]!r}") from None
        logger.info(f"Loaded {len(vectors)} word vectors from {path}")
        return cls(vectors, source=str(path))

    @classmethod
    def from_model(cls, model: ECMModel, vocab: Vocabulary) -> "WordVectors":
        """Fall back to a model's input word embeddings for the regular tokens."""
        weights = model.word_embedding.weight.detach().cpu().double().numpy()
        vectors = {token: weights[vocab.id_of(token)] for token in vocab.regular_tokens}
        return cls(vectors, source="model-embedding")
