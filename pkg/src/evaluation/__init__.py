"""Automatic evaluation: BLEU, distinct-n, embedding scores and emotion metrics."""

from .metrics import (
    bleu_n,
    coherence,
    distinct_n,
    embedding_average,
    embedding_extrema,
    embedding_greedy,
    embedding_scores,
    emotion_accuracy,
    emotion_word_rate,
)
from .service import EvaluationService, report_table, write_report
from .vectors import WordVectors

__all__ = [
    "bleu_n", "coherence", "distinct_n", "embedding_average", "embedding_extrema", "embedding_greedy",
    "embedding_scores", "emotion_accuracy", "emotion_word_rate", "EvaluationService", "report_table",
    "write_report", "WordVectors",
]
