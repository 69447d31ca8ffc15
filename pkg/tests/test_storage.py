"""Tests for checkpoint storage."""

import json

import pytest
import torch

from src.exceptions import CheckpointError, CheckpointMismatchError
from src.models import ClassifierConfig, Direction
from src.modeling import load_classifier, load_model, parameter_hash, save_classifier, save_model, train_classifier
from src.storage import LocalCheckpointStore


@pytest.fixture
def store(tmp_path):
    return LocalCheckpointStore(tmp_path / "checkpoints")


def test_round_trip_and_listing(store):
    state = {"weight": torch.arange(6.0).view(2, 3)}
    path = store.save("pretrain/forward", state, {"kind": "test", "step": 3})
    assert path.endswith("forward.pt")

    loaded, metadata = store.load("pretrain/forward")
    assert torch.equal(loaded["weight"], state["weight"])
    assert metadata["step"] == 3 and "sha256" in metadata
    assert store.list("pretrain") == ["pretrain/forward"]
    assert store.exists("pretrain/forward")

    assert store.delete("pretrain/forward")
    assert not store.exists("pretrain/forward")
    assert not store.delete("pretrain/forward")


def test_missing_checkpoint_names_the_path(store):
    with pytest.raises(CheckpointError, match="best/forward.pt"):
        store.load("best/forward")


def test_corrupted_checkpoint_is_rejected(store):
    store.save("model", {"w": torch.ones(3)}, {"kind": "test"})
    blob = store.base_path / "model.pt"
    blob.write_bytes(blob.read_bytes()[:-4] + b"junk")
    with pytest.raises(CheckpointError, match="integrity"):
        store.load("model")

    (store.base_path / "model.json").write_text("{not json", encoding="utf-8")
    with pytest.raises(CheckpointError, match="not valid JSON"):
        store.load("model")


def test_model_checkpoint_round_trip(store, tiny_model, toy_vocab):
    save_model(tiny_model, store, "final/forward", toy_vocab.fingerprint(), Direction.FORWARD, step=12)
    model, metadata = load_model(store, "final/forward", toy_vocab.fingerprint(), tiny_model.config)
    assert parameter_hash(model) == parameter_hash(tiny_model)
    assert metadata["direction"] == "forward" and metadata["step"] == 12

    with pytest.raises(CheckpointMismatchError, match="vocabulary"):
        load_model(store, "final/forward", "another-vocabulary")
    with pytest.raises(CheckpointMismatchError):
        load_model(store, "final/forward", config=tiny_model.config.model_copy(update={"hidden_size": 16}))
    with pytest.raises(CheckpointMismatchError, match="not classifier"):
        load_classifier(store, "final/forward")


def test_classifier_checkpoint_round_trip(store, toy_corpus, toy_vocab):
    cls = train_classifier(toy_corpus, ClassifierConfig(embedding_dim=8, num_filters=4, epochs=1),
                           seed=0, vocab_size=len(toy_vocab))
    save_classifier(cls, store, "classifier", toy_vocab.fingerprint())
    loaded = load_classifier(store, "classifier", toy_vocab.fingerprint())
    assert parameter_hash(loaded) == parameter_hash(cls)
    assert all(not p.requires_grad for p in loaded.parameters())

    sidecar = json.loads((store.base_path / "classifier.json").read_text())
    assert sidecar["kind"] == "classifier"
