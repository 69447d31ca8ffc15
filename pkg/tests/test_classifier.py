"""Tests for the TextCNN emotion classifier."""

import numpy as np
import pytest

from src.corpus import Vocabulary, encode_utterance
from src.models import ClassifierConfig, Corpus, Direction, EmotionCategory
from src.modeling import (
    accuracy,
    category_accuracy,
    confidence,
    parameter_hash,
    predict_emotion,
    predict_proba,
    predict_proba_batch,
    train_classifier,
)


def test_probabilities_form_a_distribution(synthetic_classifier, synthetic_splits):
    _, _, test = synthetic_splits
    probs = predict_proba_batch(synthetic_classifier, [list(p.response.ids) for p in test])
    assert probs.shape == (len(test), 6)
    assert np.allclose(probs.sum(axis=1), 1.0)
    assert (probs >= 0).all()


def test_unknown_and_short_inputs(synthetic_classifier, synthetic):
    """Test all-UNK and single-token sentences shorter than every filter."""
    _, _, vocab = synthetic
    unknown = encode_utterance(["zzz", "yyy", "xxx"], vocab)
    assert unknown.ids == (Vocabulary.UNK_ID,) * 3
    assert predict_proba(synthetic_classifier, unknown).sum() == pytest.approx(1.0)

    single = encode_utterance(["w0001"], vocab)
    assert predict_proba(synthetic_classifier, single).sum() == pytest.approx(1.0)

    with pytest.raises(ValueError):
        predict_proba_batch(synthetic_classifier, [[]])


def test_lexicon_marker_drives_prediction(synthetic_classifier, synthetic):
    corpus, lexicon, vocab = synthetic
    happy_word = sorted(lexicon.get(EmotionCategory.HAPPY))[0]
    sentence = encode_utterance(["w0003", happy_word, "w0007", "w0010"], vocab)
    assert predict_emotion(synthetic_classifier, sentence) is EmotionCategory.HAPPY


def test_accuracy_on_held_out_split(synthetic_classifier, synthetic_splits):
    _, _, test = synthetic_splits
    assert accuracy(synthetic_classifier, test) >= 0.85
    assert accuracy(synthetic_classifier, test, Direction.FORWARD) >= 0.85

    per_category = category_accuracy(synthetic_classifier, test, Direction.FORWARD)
    assert "Neutral" not in per_category
    assert all(0.0 <= v <= 1.0 for v in per_category.values())

    with pytest.raises(ValueError):
        accuracy(synthetic_classifier, Corpus(pairs=()))


def test_confidence_sums_to_one(synthetic_classifier, synthetic_splits):
    pair = synthetic_splits[2][0]
    total = sum(confidence(synthetic_classifier, pair.response, c) for c in EmotionCategory)
    assert total == pytest.approx(1.0)


def test_classifier_is_frozen_after_training(synthetic_classifier):
    assert not synthetic_classifier.training
    assert all(not p.requires_grad for p in synthetic_classifier.parameters())


def test_training_is_deterministic(toy_corpus, toy_vocab):
    config = ClassifierConfig(embedding_dim=8, num_filters=4, epochs=3, batch_size=4)
    a = train_classifier(toy_corpus, config, seed=1, vocab_size=len(toy_vocab))
    b = train_classifier(toy_corpus, config, seed=1, vocab_size=len(toy_vocab))
    assert parameter_hash(a) == parameter_hash(b)


def test_single_class_corpus_is_rejected(toy_corpus, toy_vocab):
    neutral = Corpus(pairs=tuple(
        p.model_copy(update={"q_emotion": EmotionCategory.NEUTRAL, "r_emotion": EmotionCategory.NEUTRAL})
        for p in toy_corpus
    ))
    with pytest.raises(ValueError, match="single-class"):
        train_classifier(neutral, ClassifierConfig(epochs=1), seed=0, vocab_size=len(toy_vocab))
