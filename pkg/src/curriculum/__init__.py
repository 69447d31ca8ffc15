"""Curriculum: difficulty ranking and competence-based sampling."""

from .schedule import (
    RankedDataset,
    competence,
    export_ranking_csv,
    rank_by_difficulty,
    rank_scores,
    ranking_frame,
    sample_batch,
    sample_indices,
)

__all__ = [
    "RankedDataset", "competence", "export_ranking_csv", "rank_by_difficulty", "rank_scores",
    "ranking_frame", "sample_batch", "sample_indices",
]
