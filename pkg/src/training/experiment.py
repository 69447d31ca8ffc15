"""Desk-scale synthetic experiment: generate, pretrain, then CDL under several ablations."""

import copy
import logging
from pathlib import Path
from typing import Any, Dict, Iterable, Mapping, Optional, Sequence, Tuple

import pandas as pd
from matplotlib.figure import Figure

from ..config import RunConfig, load_run_config
from ..corpus import generate_synthetic_corpus, split_corpus
from ..models import Ablation, Direction
from ..modeling.classifier import accuracy
from ..evaluation import EvaluationService
from .dual_trainer import run_training
from .pretrain import pretrain

logger = logging.getLogger(__name__)

DESK_OVERRIDES: Dict[str, Any] = {
    "model.embedding_dim": 32,
    "model.emotion_dim": 16,
    "model.hidden_size": 64,
    "model.encoder_layers": 1,
    "model.decoder_layers": 1,
    "classifier.embedding_dim": 32,
    "classifier.num_filters": 32,
    "classifier.epochs": 15,
    "trainer.pretrain_epochs": 15,
    "trainer.pretrain_lr": 0.005,
    "trainer.cdl_lr": 0.0001,
    "trainer.batch_size": 32,
    "trainer.max_cdl_steps": 400,
    "trainer.validation_interval": 25,
    "trainer.patience": 1000,
    "curriculum.length": 2000,
}


def desk_config(seed: int, overrides: Optional[Dict[str, Any]] = None) -> RunConfig:
    """Scaled-down configuration for CPU runs on the synthetic corpus."""
    merged = dict(DESK_OVERRIDES)
    merged.update(overrides or {})
    merged["seed"] = seed
    return load_run_config(None, merged)


def run_experiment(
    seed: int,
    out_dir: Path,
    ablations: Iterable[Ablation] = (Ablation.FULL, Ablation.DL),
    n_pairs: int = 600,
    vocab_size: int = 200,
    overrides: Optional[Dict[str, Any]] = None,
) -> Dict[str, Any]:
    """
    Run one seed end to end.

    Returns:
        {"classifier_acc", "pretrain": {emo_acc, emo_word}, "<ablation>": {emo_acc, emo_word, curve},
         "curve_plot": PNG of the validation curves when any were logged}
    """
    out_dir = Path(out_dir)
    config = desk_config(seed, overrides)
    corpus, lexicon, vocab = generate_synthetic_corpus(n_pairs, vocab_size, seed)
    train, valid, test = split_corpus(corpus, seed=seed)

    pretrained = pretrain(train, vocab, lexicon, config, valid=valid)
    service = EvaluationService(pretrained.classifier, lexicon, vocab)
    report, _ = service.full_report(pretrained.forward, test)
    results: Dict[str, Any] = {
        "seed": seed,
        "classifier_acc": accuracy(pretrained.classifier, test),
        "classifier_acc_responses": accuracy(pretrained.classifier, test, Direction.FORWARD),
        "pretrain": {"emo_acc": report.emo_acc, "emo_word": report.emo_word},
    }

    curves: Dict[str, Sequence[Tuple[int, float]]] = {}
    for ablation in ablations:
        ablation = Ablation(ablation)
        run_config = config.with_ablation(ablation)
        result = run_training(
            train, valid, vocab, lexicon, run_config,
            copy.deepcopy(pretrained.forward), copy.deepcopy(pretrained.backward),
            pretrained.classifier, out_dir / f"seed{seed}" / ablation.value,
        )
        report, _ = service.full_report(result.forward, test)
        results[ablation.value] = {"emo_acc": report.emo_acc, "emo_word": report.emo_word, "curve": result.curve}
        curves["CDL" if ablation is Ablation.FULL else f"CDL-{ablation.value}"] = result.curve
        logger.info(f"Seed {seed} {ablation.value}: Emotion-acc {report.emo_acc:.4f}, Emotion-word {report.emo_word:.4f}")

    if any(curves.values()):
        seed_dir = out_dir / f"seed{seed}"
        write_curve_table(curves, seed_dir / "valid_curves.csv")
        results["curve_plot"] = str(plot_validation_curves(curves, seed_dir / "valid_curves.png", title=f"seed {seed}"))
    return results


def curve_dominance(curve: Iterable, baseline: Iterable) -> float:
    """Share of matched logging steps where curve >= baseline."""
    base = dict(baseline)
    matched = [(value, base[step]) for step, value in curve if step in base]
    if not matched:
        return 0.0
    return sum(1 for value, other in matched if value >= other) / len(matched)


def write_curve_table(curves: Mapping[str, Sequence[Tuple[int, float]]], path: Path) -> Path:
    """Long-format CSV of validation curves: system, step, valid_emotion_acc."""
    rows = [
        {"system": name, "step": int(step), "valid_emotion_acc": float(value)}
        for name, curve in curves.items()
        for step, value in curve
    ]
    path.parent.mkdir(parents=True, exist_ok=True)
    pd.DataFrame(rows, columns=["system", "step", "valid_emotion_acc"]).to_csv(path, index=False)
    return path


def plot_validation_curves(
    curves: Mapping[str, Sequence[Tuple[int, float]]],
    path: Path,
    title: Optional[str] = None,
) -> Path:
    """
    Plot validation Emotion-acc against training step, one line per system.

    Raises:
        ValueError: if no curve has a point
    """
    curves = {name: list(curve) for name, curve in curves.items() if len(curve)}
    if not curves:
        raise ValueError("No validation points to plot")

    fig = Figure(figsize=(6, 4))
    ax = fig.subplots()
    for name, curve in curves.items():
        steps, values = zip(*curve)
        ax.plot(steps, values, marker="o", markersize=3, linewidth=1.5, label=name)
    ax.set_xlabel("training step")
    ax.set_ylabel("validation Emotion-acc")
    ax.set_ylim(0.0, 1.0)
    ax.grid(alpha=0.3)
    ax.legend(loc="lower right")
    if title:
        ax.set_title(title)
    fig.tight_layout()

    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=150)
    logger.info(f"Validation curves written to {path}")
    return path
