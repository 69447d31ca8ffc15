"""Tests for corpus loading, vocabulary, lexicon and synthetic data."""

import itertools
import json

import pytest

from src.corpus import (
    CorpusValidator,
    Vocabulary,
    build_vocabulary,
    corpus_statistics,
    decode_utterance,
    encode_utterance,
    generate_synthetic_corpus,
    load_corpus,
    load_lexicon,
    save_corpus,
    save_lexicon,
    split_corpus,
)
from src.exceptions import CorpusFormatError, EmotionLabelError, LexiconError
from src.models import Corpus, EmotionCategory, Split


def test_load_tsv_corpus_drops_out_of_bounds(tmp_path, toy_vocab):
    """Test parsing, encoding and length-bound dropping."""
    path = tmp_path / "train.tsv"
    path.write_text(
        "hello there day\tNeutral\tnice day weather\tHappy\n"
        "hi\tNeutral\tnice day weather\tHappy\n"
        "\n"
        "awful weather today\tsad\thate the weather\tAngry\n",
        encoding="utf-8",
    )
    corpus = load_corpus(path, toy_vocab)
    assert len(corpus) == 2
    assert corpus.dropped == 1
    assert [p.index for p in corpus] == [0, 1]
    assert corpus[1].q_emotion is EmotionCategory.SAD
    assert corpus[1].query.ids[-1] == Vocabulary.UNK_ID


def test_load_corpus_reports_line_numbers(tmp_path):
    path = tmp_path / "bad.tsv"
    path.write_text("a b c\tNeutral\td e f\tHappy\na b c\tNeutral\td e f\n", encoding="utf-8")
    with pytest.raises(CorpusFormatError) as exc:
        load_corpus(path)
    assert exc.value.line_number == 2
    assert "line 2" in str(exc.value)

    path.write_text("a b c\tNeutral\td e f\tJoyful\n", encoding="utf-8")
    with pytest.raises(EmotionLabelError, match="line 1"):
        load_corpus(path)


def test_jsonl_corpus_round_trip(tmp_path, toy_corpus):
    path = tmp_path / "train.jsonl"
    save_corpus(toy_corpus, path)
    loaded = load_corpus(path)
    assert [p.query.tokens for p in loaded] == [p.query.tokens for p in toy_corpus]
    assert [p.r_emotion for p in loaded] == [p.r_emotion for p in toy_corpus]


def test_build_vocabulary_frequency_order(toy_corpus):
    """Test frequency ranking with lexicographic ties and the size cap."""
    vocab = build_vocabulary(toy_corpus, max_size=3)
    assert len(vocab) == 3 + 4
    assert vocab.regular_tokens == ["day", "there", "weather"]
    assert all(any(tok in p.query.tokens + p.response.tokens for p in toy_corpus) for tok in vocab.regular_tokens)

    with pytest.raises(ValueError):
        build_vocabulary(Corpus(pairs=()))


def test_encode_decode(toy_vocab):
    tokens = ["hello", "there", "day"]
    utterance = encode_utterance(tokens, toy_vocab)
    assert decode_utterance(utterance.ids, toy_vocab) == tokens
    assert encode_utterance(["zebra"], toy_vocab).ids == (Vocabulary.UNK_ID,)
    assert toy_vocab.decode([Vocabulary.BOS_ID, 4, Vocabulary.EOS_ID, Vocabulary.PAD_ID]) == ["hello"]


def test_vocabulary_persistence(tmp_path, toy_vocab):
    path = tmp_path / "vocab.txt"
    toy_vocab.save(path)
    loaded = Vocabulary.load(path)
    assert loaded.fingerprint() == toy_vocab.fingerprint()
    assert Vocabulary(["x"]).fingerprint() != toy_vocab.fingerprint()


def test_lexicon_loading(tmp_path, toy_lexicon):
    """Test lexicon round trip and the disjointness rule."""
    path = tmp_path / "lexicon.json"
    save_lexicon(toy_lexicon, path)
    assert load_lexicon(path) == toy_lexicon

    path.write_text(json.dumps({"Happy": ["great"], "Like": ["great"]}))
    with pytest.raises(LexiconError, match="'great'"):
        load_lexicon(path)

    path.write_text(json.dumps({"Neutral": ["ok"]}))
    with pytest.raises(LexiconError):
        load_lexicon(path)

    path.write_text("")
    assert all(not words for words in load_lexicon(path).words.values())


def test_split_corpus_is_deterministic_cover(synthetic):
    corpus, _, _ = synthetic
    train, valid, test = split_corpus(corpus, seed=5)
    assert (len(train), len(valid), len(test)) == (192, 24, 24)
    assert (train.split, valid.split, test.split) == (Split.TRAIN, Split.VALID, Split.TEST)
    texts = sorted(p.query.tokens + p.response.tokens for part in (train, valid, test) for p in part)
    assert texts == sorted(p.query.tokens + p.response.tokens for p in corpus)

    again = split_corpus(corpus, seed=5)
    assert [p.query for p in again[0]] == [p.query for p in train]

    with pytest.raises(ValueError):
        split_corpus(corpus, ratios=(0.5, 0.5, 0.5))


def test_synthetic_corpus_properties(synthetic):
    """Test lexicon markers, combination coverage and determinism."""
    corpus, lexicon, vocab = synthetic
    assert len(corpus) == 240

    for pair in corpus:
        for utterance, emotion in ((pair.query, pair.q_emotion), (pair.response, pair.r_emotion)):
            categories = {lexicon.category_of(t) for t in utterance.tokens} - {None}
            if emotion is EmotionCategory.NEUTRAL:
                assert categories == set()
            else:
                assert categories == {emotion}
            assert utterance.ids is not None

    combos = {(p.q_emotion, p.r_emotion) for p in corpus}
    assert combos == set(itertools.product(EmotionCategory, EmotionCategory))

    again, lexicon_again, vocab_again = generate_synthetic_corpus(240, 80, seed=3)
    assert again == corpus
    assert lexicon_again == lexicon
    assert vocab_again.fingerprint() == vocab.fingerprint()


def test_synthetic_corpus_needs_combination_coverage():
    with pytest.raises(ValueError, match="6x6"):
        generate_synthetic_corpus(30, 80, seed=0)


def test_corpus_statistics(toy_corpus):
    stats = corpus_statistics(toy_corpus)
    assert list(stats.columns) == ["Emotion", "Query", "Response"]
    assert stats["Query"].sum() == len(toy_corpus)
    happy = stats[stats["Emotion"] == "Happy"].iloc[0]
    assert happy["Response"] == 2


def test_validator_reports(synthetic, toy_corpus):
    corpus, lexicon, vocab = synthetic
    result = CorpusValidator().validate(corpus, vocab, lexicon)
    assert result["is_valid"]
    assert result["lexicon_coverage"] == 1.0
    assert result["length_stats"]["query_max"] <= 30

    small = CorpusValidator().validate(toy_corpus)
    assert small["is_valid"]
    assert any("combinations missing" in w for w in small["warnings"])
