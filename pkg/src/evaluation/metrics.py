"""Automatic metrics for generated responses."""

import logging
from typing import Dict, List, Optional, Sequence

import numpy as np
from nltk.translate.bleu_score import SmoothingFunction, corpus_bleu

from ..models import EmotionCategory, EmotionLexicon
from ..modeling.classifier import EmotionClassifier, predict_proba_batch
from .vectors import WordVectors

logger = logging.getLogger(__name__)

Tokens = Sequence[str]

_SMOOTHING = SmoothingFunction(epsilon=1e-9).method1


def bleu_n(hypotheses: Sequence[Tokens], references: Sequence[Tokens], n: int) -> float:
    """Corpus BLEU with uniform weights over 1..n and the brevity penalty."""
    if n not in (1, 2):
        raise ValueError(f"n must be 1 or 2, got {n}")
    if not hypotheses or not references:
        raise ValueError("BLEU needs non-empty hypothesis and reference lists")
    if len(hypotheses) != len(references):
        raise ValueError(f"{len(hypotheses)} hypotheses for {len(references)} references")
    weights = tuple([1.0 / n] * n)
    score = corpus_bleu(
        [[list(ref)] for ref in references],
        [list(hyp) for hyp in hypotheses],
        weights=weights,
        smoothing_function=_SMOOTHING,
    )
    return float(min(1.0, max(0.0, score)))


def _ngrams(tokens: Tokens, n: int) -> List[tuple]:
    return [tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1)]


def distinct_n(sentences: Sequence[Tokens], n: int) -> float:
    """Distinct n-grams over total n-grams across all sentences."""
    if not sentences:
        raise ValueError("distinct_n needs at least one sentence")
    grams = [g for sentence in sentences for g in _ngrams(list(sentence), n)]
    if not grams:
        return 0.0
    return len(set(grams)) / len(grams)


def _cosine(a: np.ndarray, b: np.ndarray) -> float:
    if a.shape != b.shape:
        raise ValueError(f"Vector dimension mismatch: {a.shape} vs {b.shape}")
    denom = np.linalg.norm(a) * np.linalg.norm(b)
    if denom == 0:
        return 0.0
    return float(np.dot(a, b) / denom)


def embedding_average(hyp: Tokens, ref: Tokens, vectors: WordVectors) -> Optional[float]:
    """Cosine of the mean vectors; None when either side has no known token."""
    h, r = vectors.matrix(hyp), vectors.matrix(ref)
    if h is None or r is None:
        return None
    return _cosine(h.mean(axis=0), r.mean(axis=0))


def _extrema(matrix: np.ndarray) -> np.ndarray:
    """Per dimension, the signed value with the largest magnitude."""
    rows = np.abs(matrix).argmax(axis=0)
    return matrix[rows, np.arange(matrix.shape[1])]


def embedding_extrema(hyp: Tokens, ref: Tokens, vectors: WordVectors) -> Optional[float]:
    h, r = vectors.matrix(hyp), vectors.matrix(ref)
    if h is None or r is None:
        return None
    return _cosine(_extrema(h), _extrema(r))


def _greedy_match(a: np.ndarray, b: np.ndarray) -> float:
    norms_a = np.linalg.norm(a, axis=1, keepdims=True)
    norms_b = np.linalg.norm(b, axis=1, keepdims=True)
    sims = (a @ b.T) / np.maximum(norms_a * norms_b.T, 1e-12)
    return float(sims.max(axis=1).mean())


def embedding_greedy(hyp: Tokens, ref: Tokens, vectors: WordVectors) -> Optional[float]:
    """Mean of the two directional greedy token-match cosines."""
    h, r = vectors.matrix(hyp), vectors.matrix(ref)
    if h is None or r is None:
        return None
    return (_greedy_match(h, r) + _greedy_match(r, h)) / 2.0


def coherence(query: Tokens, response: Tokens, vectors: WordVectors) -> Optional[float]:
    """Cosine between the mean query vector and the mean response vector."""
    return embedding_average(response, query, vectors)


def embedding_scores(
    hypotheses: Sequence[Tokens],
    references: Sequence[Tokens],
    queries: Sequence[Tokens],
    vectors: WordVectors,
) -> Dict[str, float]:
    """
    Corpus means of Average, Extrema, Greedy and Coherence.

    Pairs with no known token on one side are skipped and counted. Raw means are
    logged; reported values are clamped at 0.
    """
    raw: Dict[str, List[float]] = {"average": [], "extrema": [], "greedy": [], "coherence": []}
    skipped = 0
    for hyp, ref, query in zip(hypotheses, references, queries):
        average = embedding_average(hyp, ref, vectors)
        coh = coherence(query, hyp, vectors)
        if average is None or coh is None:
            skipped += 1
            continue
        raw["average"].append(average)
        raw["extrema"].append(embedding_extrema(hyp, ref, vectors))
        raw["greedy"].append(embedding_greedy(hyp, ref, vectors))
        raw["coherence"].append(coh)

    means = {name: float(np.mean(values)) if values else 0.0 for name, values in raw.items()}
    logger.info(f"Raw embedding scores {means} ({skipped} pairs skipped)")
    scores = {name: min(1.0, max(0.0, value)) for name, value in means.items()}
    scores["skipped"] = skipped
    return scores


def emotion_accuracy(
    cls: EmotionClassifier,
    generated: Sequence[Sequence[int]],
    target_emotions: Sequence[EmotionCategory],
) -> float:
    """Share of generated id sequences classified as their target emotion; empty outputs count as misses."""
    if not generated:
        raise ValueError("emotion_accuracy needs at least one generated response")
    if len(generated) != len(target_emotions):
        raise ValueError(f"{len(generated)} responses for {len(target_emotions)} target emotions")
    nonempty = [i for i, seq in enumerate(generated) if len(seq)]
    correct = 0
    if nonempty:
        predicted = predict_proba_batch(cls, [generated[i] for i in nonempty]).argmax(axis=1)
        correct = sum(int(predicted[row]) == int(target_emotions[i]) for row, i in enumerate(nonempty))
    return correct / len(generated)


def emotion_word_rate(
    lexicon: EmotionLexicon,
    generated: Sequence[Tokens],
    target_emotions: Sequence[EmotionCategory],
) -> float:
    """Share of non-Neutral-target responses that contain a word of the target category."""
    if not generated:
        raise ValueError("emotion_word_rate needs at least one generated response")
    if len(generated) != len(target_emotions):
        raise ValueError(f"{len(generated)} responses for {len(target_emotions)} target emotions")
    considered = hits = 0
    for tokens, emotion in zip(generated, target_emotions):
        emotion = EmotionCategory.coerce(emotion)
        if emotion is EmotionCategory.NEUTRAL:
            continue
        considered += 1
        words = lexicon.get(emotion)
        hits += any(token in words for token in tokens)
    if considered == 0:
        raise ValueError("emotion_word_rate is undefined when every target emotion is Neutral")
    return hits / considered
