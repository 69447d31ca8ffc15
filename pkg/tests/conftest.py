"""Shared fixtures."""

import pytest

from src.config import settings
from src.corpus import Vocabulary, encode_corpus, generate_synthetic_corpus, split_corpus
from src.models import (
    ClassifierConfig,
    Corpus,
    DialoguePair,
    EmotionCategory,
    EmotionLexicon,
    ModelConfig,
    Utterance,
)
from src.modeling import init_model, train_classifier


def pytest_collection_modifyitems(config, items):
    if settings.RUN_SLOW:
        return
    skip = pytest.mark.skip(reason="desk-scale run; set CDL_RUN_SLOW=1")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)


@pytest.fixture
def toy_vocab():
    return Vocabulary(["hello", "there", "great", "awful", "day", "bad", "nice", "weather", "love", "hate"])


@pytest.fixture
def toy_lexicon():
    return EmotionLexicon(words={
        EmotionCategory.HAPPY: frozenset({"great", "nice"}),
        EmotionCategory.ANGRY: frozenset({"hate"}),
        EmotionCategory.LIKE: frozenset({"love"}),
        EmotionCategory.SAD: frozenset({"awful"}),
        EmotionCategory.DISGUST: frozenset({"bad"}),
    })


@pytest.fixture
def toy_corpus(toy_vocab):
    pairs = [
        ("hello there day", "Neutral", "nice day weather", "Happy"),
        ("awful weather today", "Sad", "hate the weather", "Angry"),
        ("love this day", "Like", "great day there", "Happy"),
        ("bad weather there", "Disgust", "hello there day", "Neutral"),
    ]
    corpus = Corpus(pairs=tuple(
        DialoguePair(
            query=Utterance(tokens=tuple(q.split())),
            response=Utterance(tokens=tuple(r.split())),
            q_emotion=qe,
            r_emotion=re,
            index=i,
        )
        for i, (q, qe, r, re) in enumerate(pairs)
    ))
    return encode_corpus(corpus, toy_vocab)


@pytest.fixture
def tiny_config(toy_vocab):
    return ModelConfig(
        vocab_size=len(toy_vocab),
        embedding_dim=8,
        emotion_dim=4,
        hidden_size=8,
        encoder_layers=1,
        decoder_layers=1,
        max_decode_length=8,
        min_decode_length=3,
    )


@pytest.fixture
def tiny_model(tiny_config, toy_lexicon, toy_vocab):
    return init_model(tiny_config, seed=0, lexicon=toy_lexicon, vocab=toy_vocab)


@pytest.fixture(scope="session")
def synthetic():
    """(corpus, lexicon, vocab) of a small synthetic corpus."""
    return generate_synthetic_corpus(240, 80, seed=3)


@pytest.fixture(scope="session")
def synthetic_splits(synthetic):
    corpus, _, _ = synthetic
    return split_corpus(corpus, seed=3)


@pytest.fixture(scope="session")
def synthetic_classifier(synthetic, synthetic_splits):
    _, _, vocab = synthetic
    train, valid, _ = synthetic_splits
    config = ClassifierConfig(embedding_dim=32, num_filters=32, epochs=20, patience=20, learning_rate=5e-3)
    return train_classifier(train, config, seed=0, vocab_size=len(vocab), valid=valid)
