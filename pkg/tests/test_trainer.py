"""Tests for pretraining and curriculum dual learning."""

import copy
import json

import numpy as np
import pandas as pd
import pytest
import torch

from src.config import RunConfig
from src.corpus import Vocabulary
from src.exceptions import TrainingCollapseError
from src.models import ClassifierConfig, CurriculumConfig, Direction, EmotionCategory, ModelConfig, TrainerConfig
from src.modeling import init_model, parameter_hash, train_classifier
from src.modeling.batching import emotion_tensor, make_pair_batch, pad_sequences
from src.modeling.utils import make_generator
from src.training import (
    TrainingLog,
    build_state,
    model_config_for,
    policy_gradient_loss,
    pretrain,
    read_log,
    rl_step_backward,
    rl_step_forward,
    run_training,
)
from src.training.experiment import plot_validation_curves, write_curve_table

STEP_FIELDS = ("rl_loss", "tf_loss", "tf_token_nll", "r_e1", "r_e2", "r_c", "total", "baseline")


@pytest.fixture
def run_config(tiny_config):
    return RunConfig(
        model=tiny_config,
        classifier=ClassifierConfig(embedding_dim=8, num_filters=4, epochs=1, batch_size=4),
        curriculum=CurriculumConfig(length=10),
        trainer=TrainerConfig(batch_size=4, cdl_lr=1e-3, max_cdl_steps=4, validation_interval=2,
                              pretrain_epochs=0, collapse_factor=10.0),
    )


@pytest.fixture
def toy_classifier(toy_corpus, toy_vocab, run_config):
    return train_classifier(toy_corpus, run_config.classifier, seed=0, vocab_size=len(toy_vocab))


def _fresh_models(config, lexicon, vocab):
    return (init_model(config.model, 1, lexicon, vocab), init_model(config.model, 2, lexicon, vocab))


def test_bandit_reinforce_with_greedy_baseline():
    """One-step ECM over three tokens, reward 1 for token 4: p(4) rises from 1/3 to above 0.9."""
    config = ModelConfig(vocab_size=6, embedding_dim=4, emotion_dim=4, hidden_size=8, encoder_layers=1,
                         decoder_layers=1, max_decode_length=1, min_decode_length=1)
    model = init_model(config, seed=0)
    with torch.no_grad():
        model.generic_head.weight.zero_()
        model.generic_head.bias.zero_()
    optimizer = torch.optim.Adam(model.parameters(), lr=0.05)
    generator = torch.Generator().manual_seed(0)
    source = pad_sequences([[4]] * 16, model.device)
    emotions = emotion_tensor([EmotionCategory.NEUTRAL] * 16)
    arms = [Vocabulary.UNK_ID, 4, 5]

    history = []
    for _ in range(500):
        with torch.no_grad():
            step_probs = model.teacher_forced(source, pad_sequences([[4]] * 16, model.device), emotions).log_probs[0, 0].exp()
        history.append(float(step_probs[4] / step_probs[arms].sum()))

        sampled = model.generate(source, emotions, greedy=False, generator=generator)
        greedy = model.generate(source, emotions, greedy=True)
        rewards = torch.tensor([float(seq == [4]) for seq in sampled.sequences])
        baselines = torch.tensor([float(seq == [4]) for seq in greedy.sequences])
        log_probs = model.sequence_logprob(source, pad_sequences(sampled.sequences, model.device), emotions)
        loss = policy_gradient_loss(log_probs, rewards - baselines)
        optimizer.zero_grad()
        loss.backward()
        optimizer.step()

    windows = np.asarray(history).reshape(10, 50).mean(axis=1)
    assert history[0] == pytest.approx(1 / 3, abs=1e-6)
    assert windows[-1] >= 0.9
    assert all(a <= b + 1e-6 for a, b in zip(windows, windows[1:]))


def test_rl_step_minimises_advantage_weighted_log_likelihood(
    run_config, toy_corpus, toy_vocab, toy_lexicon, toy_classifier
):
    """The RL loss of a step is -mean(A * log p) over the step's own samples."""
    forward, backward = _fresh_models(run_config, toy_lexicon, toy_vocab)
    state = build_state(toy_corpus, run_config, toy_vocab, toy_lexicon, forward, backward, toy_classifier, TrainingLog())
    state.step = 3
    before = copy.deepcopy(forward).eval()
    batch = toy_corpus.pairs

    result = rl_step_forward(state, batch)

    pairs = make_pair_batch(batch, Direction.FORWARD, before.device)
    generator = make_generator(run_config.seeds()["forward_sampling"], state.step)
    sampled = before.generate(pairs.source, pairs.target_emotions, greedy=False,
                              temperature=run_config.trainer.sample_temperature, generator=generator)
    with torch.no_grad():
        log_probs = before.sequence_logprob(pairs.source, pad_sequences(sampled.sequences, before.device),
                                            pairs.target_emotions)
    advantages = torch.tensor([r.advantage for r in result.rewards], dtype=log_probs.dtype)
    assert any(r.advantage != 0.0 for r in result.rewards)
    assert result.rl_loss == pytest.approx(float(policy_gradient_loss(log_probs, advantages)), abs=1e-5)


def test_zero_advantage_gives_zero_gradient():
    logits = torch.randn(4, 5, requires_grad=True)
    log_probs = torch.log_softmax(logits, dim=-1)[:, 0]
    policy_gradient_loss(log_probs, torch.zeros(4)).backward()
    assert float(logits.grad.abs().max()) == 0.0


def test_rl_step_reads_but_never_updates_dual_and_classifier(
    run_config, toy_corpus, toy_vocab, toy_lexicon, toy_classifier
):
    forward, backward = _fresh_models(run_config, toy_lexicon, toy_vocab)
    state = build_state(toy_corpus, run_config, toy_vocab, toy_lexicon, forward, backward, toy_classifier, TrainingLog())
    state.trace_hashes = True
    state.step = 1

    before = parameter_hash(forward)
    result = rl_step_forward(state, toy_corpus.pairs)
    assert result.hashes["dual_before"] == result.hashes["dual_after"]
    assert result.hashes["classifier_before"] == result.hashes["classifier_after"]
    assert parameter_hash(forward) != before
    assert len(result.rewards) == len(toy_corpus)
    assert all(0.0 <= r.total <= 2.5 for r in result.rewards)

    result = rl_step_backward(state, toy_corpus.pairs)
    assert result.direction is Direction.BACKWARD
    assert result.hashes["dual_before"] == result.hashes["dual_after"]


def test_collapse_guard(run_config, toy_corpus, toy_vocab, toy_lexicon, toy_classifier):
    forward, backward = _fresh_models(run_config, toy_lexicon, toy_vocab)
    state = build_state(toy_corpus, run_config, toy_vocab, toy_lexicon, forward, backward, toy_classifier, TrainingLog())
    state.reference_nll[Direction.FORWARD] = 1e-6
    with pytest.raises(TrainingCollapseError) as exc:
        rl_step_forward(state, toy_corpus.pairs)
    assert exc.value.diagnostics["direction"] == "forward"


def test_pretrain_with_zero_epochs_returns_initial_models(run_config, toy_corpus, toy_vocab, toy_lexicon):
    result = pretrain(toy_corpus, toy_vocab, toy_lexicon, run_config)
    seeds = run_config.seeds()
    expected = init_model(model_config_for(run_config, toy_vocab), seeds["forward_init"], toy_lexicon, toy_vocab)
    assert parameter_hash(result.forward) == parameter_hash(expected)
    assert all(not p.requires_grad for p in result.classifier.parameters())


def test_run_training_writes_artifacts(tmp_path, run_config, toy_corpus, toy_vocab, toy_lexicon, toy_classifier):
    forward, backward = _fresh_models(run_config, toy_lexicon, toy_vocab)
    result = run_training(toy_corpus, toy_corpus, toy_vocab, toy_lexicon, run_config,
                          forward, backward, toy_classifier, tmp_path)
    assert result.steps == 4
    assert [step for step, _ in result.curve] == [2, 4]

    for name in ("meta.json", "train_log.jsonl", "valid_curve.csv", "best/forward.pt", "final/backward.pt",
                 "last/progress.pt", "last/progress.json"):
        assert (tmp_path / name).exists(), name

    meta = json.loads((tmp_path / "meta.json").read_text())
    assert meta["vocab_hash"] == toy_vocab.fingerprint()
    assert meta["seeds"] == run_config.seeds()

    records = read_log(tmp_path / "train_log.jsonl")
    steps = [r for r in records if "direction" in r]
    assert [(r["step"], r["direction"]) for r in steps[:2]] == [(1, "forward"), (1, "backward")]
    assert len(steps) == 8
    assert all(r["frontier"] >= 1 for r in steps)
    assert pd.read_csv(tmp_path / "valid_curve.csv")["step"].tolist() == [2, 4]


def test_resume_reproduces_the_uninterrupted_run(
    tmp_path, run_config, toy_corpus, toy_vocab, toy_lexicon, toy_classifier
):
    full_dir, split_dir = tmp_path / "full", tmp_path / "split"
    run_training(toy_corpus, toy_corpus, toy_vocab, toy_lexicon, run_config,
                 *_fresh_models(run_config, toy_lexicon, toy_vocab), toy_classifier, full_dir)

    half = run_config.model_copy(update={"trainer": run_config.trainer.model_copy(update={"max_cdl_steps": 2})})
    run_training(toy_corpus, toy_corpus, toy_vocab, toy_lexicon, half,
                 *_fresh_models(run_config, toy_lexicon, toy_vocab), toy_classifier, split_dir)
    run_training(toy_corpus, toy_corpus, toy_vocab, toy_lexicon, run_config,
                 *_fresh_models(run_config, toy_lexicon, toy_vocab), toy_classifier, split_dir,
                 resume_from=split_dir)

    full = [r for r in read_log(full_dir / "train_log.jsonl") if "direction" in r]
    resumed = [r for r in read_log(split_dir / "train_log.jsonl") if "direction" in r]
    assert [(r["step"], r["direction"]) for r in resumed] == [(r["step"], r["direction"]) for r in full]
    for a, b in zip(full, resumed):
        for name in STEP_FIELDS:
            assert b[name] == pytest.approx(a[name], rel=1e-6, abs=1e-9), (a["step"], name)


def test_training_log_round_trip(tmp_path):
    path = tmp_path / "log.jsonl"
    with TrainingLog(path) as log:
        log.write({"step": 1, "loss": np.float64(0.5)})
        log.write({"step": 2, "loss": 0.25})
    assert read_log(path) == [{"step": 1, "loss": 0.5}, {"step": 2, "loss": 0.25}]
    assert len(log.records) == 2

    with TrainingLog(path, append=True) as log:
        log.write({"step": 3})
    assert len(read_log(path)) == 3


def test_validation_curves_are_plotted_and_tabulated(tmp_path):
    curves = {"CDL": [(25, 0.4), (50, 0.6), (75, 0.7)], "CDL-dl": [(25, 0.35), (50, 0.5)], "CDL-emo": []}

    plot = plot_validation_curves(curves, tmp_path / "seed0" / "valid_curves.png", title="seed 0")
    assert plot.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"

    table = pd.read_csv(write_curve_table(curves, tmp_path / "seed0" / "valid_curves.csv"))
    assert table.groupby("system")["step"].count().to_dict() == {"CDL": 3, "CDL-dl": 2}

    with pytest.raises(ValueError):
        plot_validation_curves({"CDL": []}, tmp_path / "empty.png")
