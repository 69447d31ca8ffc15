"""Synthetic emotion-tagged dialogue corpus for desk-scale experiments."""

import itertools
import logging
from typing import Dict, List, Tuple

import numpy as np

from ..models import Corpus, DialoguePair, EmotionCategory, EmotionLexicon, Split, Utterance
from .loader import encode_corpus
from .vocabulary import build_vocabulary, Vocabulary

logger = logging.getLogger(__name__)

# Emotion counts of the reference training set, in EmotionCategory id order
QUERY_EMOTION_COUNTS = (335_138, 257_471, 128_482, 184_427, 79_611, 120_358)
RESPONSE_EMOTION_COUNTS = (195_553, 197_565, 179_215, 197_428, 138_198, 197_528)

MIN_PAIRS = 60
MIN_VOCAB = 60
NOISE_RATE = 0.1


def _marginal(counts: Tuple[int, ...]) -> np.ndarray:
    probs = np.asarray(counts, dtype=np.float64)
    return probs / probs.sum()


def _insert_emotion_words(
    rng: np.random.Generator,
    tokens: List[str],
    words: List[str],
    at_edges: bool,
) -> List[str]:
    """Insert 1-2 emotion words either at the sentence edges or at random positions."""
    tokens = list(tokens)
    for _ in range(int(rng.integers(1, 3))):
        word = words[int(rng.integers(len(words)))]
        if at_edges:
            position = 0 if rng.random() < 0.5 else len(tokens)
        else:
            position = int(rng.integers(len(tokens) + 1))
        tokens.insert(position, word)
    return tokens


def generate_synthetic_corpus(
    n_pairs: int,
    vocab_size: int,
    seed: int,
) -> Tuple[Corpus, EmotionLexicon, Vocabulary]:
    """
    Generate an emotion-tagged corpus with a learnable query-to-response mapping.

    Every non-Neutral utterance carries 1-2 words from its category's lexicon and
    no other emotion words. A response is the token-wise image of its query's
    content words under a fixed permutation, with each token replaced by a random
    content word with probability NOISE_RATE.

    Args:
        n_pairs: Number of pairs (at least 60, enough to cover all 36 emotion combinations)
        vocab_size: Number of distinct surface tokens to draw from (at least 60)
        seed: RNG seed; equal seeds give identical corpora

    Returns:
        (encoded corpus, lexicon, vocabulary built from the corpus)
    """
    if n_pairs < MIN_PAIRS:
        raise ValueError(
            f"n_pairs={n_pairs} is too small to cover all 6x6 (e_q, e_r) combinations; "
            f"need at least {MIN_PAIRS}"
        )
    if vocab_size < MIN_VOCAB:
        raise ValueError(f"vocab_size must be at least {MIN_VOCAB}, got {vocab_size}")

    rng = np.random.default_rng(seed)
    emotional = [c for c in EmotionCategory if c is not EmotionCategory.NEUTRAL]

    per_category = max(2, vocab_size // 20)
    lexicon_words: Dict[EmotionCategory, List[str]] = {
        c: [f"{c.label.lower()}{j:02d}" for j in range(per_category)] for c in emotional
    }
    n_content = vocab_size - per_category * len(emotional)
    content = [f"w{i:04d}" for i in range(n_content)]
    mapping = rng.permutation(n_content)

    combos = list(itertools.product(EmotionCategory, EmotionCategory))
    q_probs = _marginal(QUERY_EMOTION_COUNTS)
    r_probs = _marginal(RESPONSE_EMOTION_COUNTS)
    labels = combos + [
        (EmotionCategory(int(q)), EmotionCategory(int(r)))
        for q, r in zip(
            rng.choice(6, size=n_pairs - len(combos), p=q_probs),
            rng.choice(6, size=n_pairs - len(combos), p=r_probs),
        )
    ]

    pairs: List[DialoguePair] = []
    for position in rng.permutation(n_pairs):
        e_q, e_r = labels[int(position)]
        source_ids = rng.integers(n_content, size=int(rng.integers(3, 9)))

        query = [content[i] for i in source_ids]
        if e_q is not EmotionCategory.NEUTRAL:
            query = _insert_emotion_words(rng, query, lexicon_words[e_q], at_edges=False)

        response = []
        for i in source_ids:
            if rng.random() < NOISE_RATE:
                response.append(content[int(rng.integers(n_content))])
            else:
                response.append(content[mapping[i]])
        if e_r is not EmotionCategory.NEUTRAL:
            response = _insert_emotion_words(rng, response, lexicon_words[e_r], at_edges=True)

        pairs.append(DialoguePair(
            query=Utterance(tokens=tuple(query)),
            response=Utterance(tokens=tuple(response)),
            q_emotion=e_q,
            r_emotion=e_r,
            index=len(pairs),
        ))

    corpus = Corpus(pairs=tuple(pairs), split=Split.TRAIN)
    lexicon = EmotionLexicon(words={c: frozenset(ws) for c, ws in lexicon_words.items()})
    vocab = build_vocabulary(corpus)
    logger.info(
        f"Generated {n_pairs} synthetic pairs: {n_content} content words, "
        f"{per_category} emotion words per category, vocabulary {len(vocab)}"
    )
    return encode_corpus(corpus, vocab), lexicon, vocab
