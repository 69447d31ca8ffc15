"""Difficulty ranking and competence-based batch sampling."""

import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional

import numpy as np
import pandas as pd

from ..models import Corpus, CurriculumConfig, DialoguePair, Direction
from ..modeling.batching import utterance_ids
from ..modeling.classifier import EmotionClassifier, predict_proba_batch

logger = logging.getLogger(__name__)


def competence(t: int, config: CurriculumConfig) -> float:
    """f(t) = min(1, sqrt(t (1 - c0^2) / T + c0^2))."""
    if t < 0:
        raise ValueError(f"step must be non-negative, got {t}")
    c0 = config.c0_squared
    return min(1.0, math.sqrt(t * (1.0 - c0) / config.length + c0))


@dataclass(frozen=True)
class RankedDataset:
    """Corpus indices ordered easy to hard, with the score of each corpus index."""
    order: np.ndarray        # permutation of 0..N-1
    scores: np.ndarray       # scores[i] = confidence of corpus index i
    direction: Direction

    def __len__(self) -> int:
        return len(self.order)

    def frontier(self, t: int, config: CurriculumConfig) -> int:
        """Number of leading entries available at step t; at least one."""
        n = len(self.order)
        if not config.enabled:
            return n
        size = math.ceil(competence(t, config) * n - 1e-9)
        return min(max(size, 1), n)


def rank_scores(scores: np.ndarray, direction: Direction) -> RankedDataset:
    """Order by score descending, ties by ascending index."""
    scores = np.asarray(scores, dtype=np.float64)
    order = np.lexsort((np.arange(len(scores)), -scores))
    return RankedDataset(order=order, scores=scores, direction=direction)


def rank_by_difficulty(
    corpus: Corpus,
    cls: EmotionClassifier,
    direction: Direction,
    batch_size: int = 256,
) -> RankedDataset:
    """
    Rank pairs by the classifier's gold-class confidence (high = easy).

    Forward ranking scores responses against e_r; backward scores queries against e_q.
    """
    scores = np.zeros(len(corpus))
    for start in range(0, len(corpus), batch_size):
        chunk = corpus.pairs[start:start + batch_size]
        probs = predict_proba_batch(cls, [utterance_ids(p.target(direction)) for p in chunk])
        for row, pair in enumerate(chunk):
            scores[start + row] = probs[row, int(pair.target_emotion(direction))]
    ranked = rank_scores(scores, direction)
    logger.info(
        f"Ranked {len(corpus)} pairs for {direction.value}: "
        f"confidence {scores.max() if len(scores) else 0:.3f} (easiest) to "
        f"{scores.min() if len(scores) else 0:.3f} (hardest)"
    )
    return ranked


def sample_indices(
    ranked: RankedDataset,
    t: int,
    batch_size: int,
    seed: int,
    config: CurriculumConfig,
) -> np.ndarray:
    """Corpus indices drawn uniformly with replacement from the frontier at step t."""
    if len(ranked) == 0:
        raise ValueError("Cannot sample from an empty ranking")
    frontier = ranked.frontier(t, config)
    rng = np.random.default_rng([seed, t])
    positions = rng.integers(0, frontier, size=batch_size)
    return ranked.order[positions]


def sample_batch(
    ranked: RankedDataset,
    corpus: Corpus,
    t: int,
    batch_size: int,
    seed: int,
    config: CurriculumConfig,
) -> List[DialoguePair]:
    """Batch of pairs sampled from the top f(t) portion of the ranking."""
    return [corpus[int(i)] for i in sample_indices(ranked, t, batch_size, seed, config)]


def ranking_frame(ranked: RankedDataset) -> pd.DataFrame:
    return pd.DataFrame({
        "rank": np.arange(len(ranked)),
        "corpus_index": ranked.order,
        "confidence": ranked.scores[ranked.order],
    })


def export_ranking_csv(ranked: RankedDataset, path: Path, corpus: Optional[Corpus] = None) -> Path:
    """Write (rank, corpus_index, confidence) rows, plus the ranked text when a corpus is given."""
    frame = ranking_frame(ranked)
    if corpus is not None:
        frame["text"] = [corpus[int(i)].target(ranked.direction).text for i in ranked.order]
        frame["emotion"] = [corpus[int(i)].target_emotion(ranked.direction).label for i in ranked.order]
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False)
    logger.info(f"Wrote {ranked.direction.value} ranking to {path}")
    return path
