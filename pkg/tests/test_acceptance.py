"""Desk-scale end-to-end checks on the synthetic corpus; run with CDL_RUN_SLOW=1."""

from pathlib import Path

import pandas as pd
import pytest

from src.corpus import generate_synthetic_corpus, split_corpus
from src.models import Ablation
from src.modeling import parameter_hash
from src.training import pretrain, read_log, run_training
from src.training.experiment import curve_dominance, desk_config, run_experiment

pytestmark = pytest.mark.slow

SEEDS = (0, 1, 2)


@pytest.fixture(scope="module")
def experiments(tmp_path_factory):
    out = tmp_path_factory.mktemp("experiments")
    return [
        run_experiment(seed, out, ablations=(Ablation.FULL, Ablation.DL, Ablation.EMO))
        for seed in SEEDS
    ]


def _holds(flags):
    return sum(bool(f) for f in flags) >= 2


def test_classifier_accuracy(experiments):
    assert _holds(r["classifier_acc"] >= 0.95 for r in experiments)


def test_cdl_improves_emotion_accuracy(experiments):
    assert _holds(r["full"]["emo_acc"] >= r["pretrain"]["emo_acc"] + 0.05 for r in experiments)


def test_emotion_only_rewards_raise_emotion_words(experiments):
    assert _holds(r["emo"]["emo_word"] > r["pretrain"]["emo_word"] for r in experiments)


def test_curriculum_dominates_plain_dual_learning(experiments):
    assert _holds(curve_dominance(r["full"]["curve"], r["dl"]["curve"]) >= 0.7 for r in experiments)
    for r in experiments:
        plot = Path(r["curve_plot"])
        assert plot.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"
        assert set(pd.read_csv(plot.with_suffix(".csv"))["system"]) == {"CDL", "CDL-dl", "CDL-emo"}


def test_frozen_models_over_a_long_run(tmp_path):
    """Over 200 steps the classifier never changes, nor the dual model within any step."""
    config = desk_config(0, {"trainer.max_cdl_steps": 200, "trainer.validation_interval": 50,
                             "trainer.pretrain_epochs": 2, "classifier.epochs": 3})
    corpus, lexicon, vocab = generate_synthetic_corpus(240, 80, seed=0)
    train, valid, _ = split_corpus(corpus, seed=0)
    pretrained = pretrain(train, vocab, lexicon, config, valid=valid)
    classifier_hash = parameter_hash(pretrained.classifier)

    run_training(train, valid, vocab, lexicon, config, pretrained.forward, pretrained.backward,
                 pretrained.classifier, tmp_path, trace_hashes=True)

    steps = [r for r in read_log(tmp_path / "train_log.jsonl") if "hashes" in r]
    assert len(steps) == 400
    for record in steps:
        hashes = record["hashes"]
        assert hashes["dual_before"] == hashes["dual_after"]
        assert hashes["classifier_before"] == hashes["classifier_after"] == classifier_hash
