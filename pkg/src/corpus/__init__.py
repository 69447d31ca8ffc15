"""Corpus ingestion, vocabulary, emotion lexicon and synthetic data."""

from .lexicon import load_lexicon, save_lexicon
from .loader import (
    MAX_LENGTH,
    MIN_LENGTH,
    corpus_statistics,
    decode_utterance,
    encode_corpus,
    encode_utterance,
    load_corpus,
    save_corpus,
    split_corpus,
)
from .synthetic import generate_synthetic_corpus
from .validator import CorpusValidator
from .vocabulary import Vocabulary, build_vocabulary

__all__ = [
    "MAX_LENGTH",
    "MIN_LENGTH",
    "CorpusValidator",
    "Vocabulary",
    "build_vocabulary",
    "corpus_statistics",
    "decode_utterance",
    "encode_corpus",
    "encode_utterance",
    "generate_synthetic_corpus",
    "load_corpus",
    "load_lexicon",
    "save_corpus",
    "save_lexicon",
    "split_corpus",
]
