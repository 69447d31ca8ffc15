"""Consistency checks for loaded or generated corpora."""

import logging
from collections import Counter
from typing import Dict, List, Optional

from ..models import Corpus, EmotionCategory, EmotionLexicon
from .loader import MAX_LENGTH, MIN_LENGTH
from .vocabulary import Vocabulary

logger = logging.getLogger(__name__)


class CorpusValidator:
    """Validate a corpus against the data-model invariants."""

    def __init__(self, min_length: int = MIN_LENGTH, max_length: int = MAX_LENGTH, imbalance_ratio: float = 10.0):
        self.min_length = min_length
        self.max_length = max_length
        self.imbalance_ratio = imbalance_ratio

    def validate(
        self,
        corpus: Corpus,
        vocab: Optional[Vocabulary] = None,
        lexicon: Optional[EmotionLexicon] = None,
    ) -> Dict:
        """
        Validate corpus and return a summary.

        Args:
            corpus: Corpus to check
            vocab: If given, encoded ids are checked against its size
            lexicon: If given, lexicon coverage of emotional utterances is reported

        Returns:
            Dictionary with validation results
        """
        logger.info(f"Validating {corpus.split.value} corpus of {len(corpus)} pairs")

        issues: List[str] = []
        warnings: List[str] = []

        self._check_indices(corpus, issues)
        self._check_lengths(corpus, issues)
        if vocab is not None:
            self._check_ids(corpus, vocab, issues)
        coverage = self._check_emotion_coverage(corpus, warnings)
        lexicon_hits = self._lexicon_coverage(corpus, lexicon) if lexicon is not None else None

        return {
            "is_valid": len(issues) == 0,
            "issues": issues,
            "warnings": warnings,
            "total_pairs": len(corpus),
            "dropped_pairs": corpus.dropped,
            "emotion_coverage": coverage,
            "lexicon_coverage": lexicon_hits,
            "length_stats": self._length_stats(corpus),
        }

    def _check_indices(self, corpus: Corpus, issues: List[str]):
        for position, pair in enumerate(corpus):
            if pair.index != position:
                issues.append(f"Index gap: pair at position {position} has index {pair.index}")
                return

    def _check_lengths(self, corpus: Corpus, issues: List[str]):
        bad = [
            p.index for p in corpus
            if not (self.min_length <= len(p.query) <= self.max_length)
            or not (self.min_length <= len(p.response) <= self.max_length)
        ]
        if bad:
            issues.append(f"{len(bad)} pairs outside length bounds [{self.min_length}, {self.max_length}]")

    def _check_ids(self, corpus: Corpus, vocab: Vocabulary, issues: List[str]):
        for pair in corpus:
            for utterance in (pair.query, pair.response):
                if utterance.ids is None:
                    issues.append(f"Pair {pair.index} is not encoded")
                    return
                if any(i >= len(vocab) or i < 0 for i in utterance.ids):
                    issues.append(f"Pair {pair.index} has ids outside the vocabulary")
                    return

    def _check_emotion_coverage(self, corpus: Corpus, warnings: List[str]) -> Dict[str, int]:
        """Count (e_q, e_r) combinations; warn on missing ones and heavy imbalance."""
        combos = Counter((p.q_emotion, p.r_emotion) for p in corpus)
        missing = [
            f"{q.label}->{r.label}"
            for q in EmotionCategory for r in EmotionCategory
            if combos[(q, r)] == 0
        ]
        if missing:
            warnings.append(f"{len(missing)} of 36 emotion combinations missing")

        response_counts = Counter(p.r_emotion for p in corpus)
        present = [c for c in response_counts.values() if c > 0]
        if present and max(present) > self.imbalance_ratio * min(present):
            warnings.append(
                f"Response emotions imbalanced: max {max(present)} vs min {min(present)}"
            )
        return {f"{q.label}->{r.label}": n for (q, r), n in sorted(combos.items())}

    def _lexicon_coverage(self, corpus: Corpus, lexicon: EmotionLexicon) -> float:
        """Fraction of non-Neutral utterances containing a word of their own category."""
        hits = total = 0
        for pair in corpus:
            for utterance, emotion in ((pair.query, pair.q_emotion), (pair.response, pair.r_emotion)):
                if emotion is EmotionCategory.NEUTRAL:
                    continue
                total += 1
                words = lexicon.get(emotion)
                hits += any(t in words for t in utterance.tokens)
        return hits / total if total else 0.0

    def _length_stats(self, corpus: Corpus) -> Dict[str, float]:
        if len(corpus) == 0:
            return {}
        queries = [len(p.query) for p in corpus]
        responses = [len(p.response) for p in corpus]
        return {
            "query_mean": sum(queries) / len(queries),
            "query_max": max(queries),
            "response_mean": sum(responses) / len(responses),
            "response_max": max(responses),
        }
