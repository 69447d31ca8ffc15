"""Maximum-likelihood pretraining of both directions and the emotion classifier."""

import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np
import torch

from ..config import RunConfig
from ..corpus.vocabulary import Vocabulary
from ..models import Corpus, DialoguePair, Direction, EmotionLexicon, ModelConfig
from ..modeling.classifier import EmotionClassifier, accuracy, category_accuracy, train_classifier
from ..modeling.ecm import ECMModel, build_optimizer, forward_loss, init_model, mle_update
from .log import TrainingLog

logger = logging.getLogger(__name__)


@dataclass
class PretrainResult:
    forward: ECMModel
    backward: ECMModel
    classifier: EmotionClassifier


def model_config_for(config: RunConfig, vocab: Vocabulary) -> ModelConfig:
    """The run's model shape with the vocabulary size filled in."""
    return config.model.model_copy(update={"vocab_size": len(vocab)})


@torch.no_grad()
def mean_token_nll(model: ECMModel, pairs: Sequence[DialoguePair], direction: Direction, batch_size: int = 64) -> float:
    """Teacher-forcing NLL per scored token (targets plus EOS)."""
    if not pairs:
        raise ValueError("Cannot score an empty set of pairs")
    total = tokens = 0.0
    for start in range(0, len(pairs), batch_size):
        chunk = pairs[start:start + batch_size]
        total += float(forward_loss(model, chunk, direction).nll.sum())
        tokens += sum(len(p.target(direction)) + 1 for p in chunk)
    return total / tokens


@torch.no_grad()
def mean_loss(model: ECMModel, pairs: Sequence[DialoguePair], direction: Direction, batch_size: int = 64) -> float:
    """Batch-mean ECM loss over a set of pairs."""
    total = 0.0
    for start in range(0, len(pairs), batch_size):
        chunk = pairs[start:start + batch_size]
        total += float(forward_loss(model, chunk, direction).total.sum())
    return total / max(1, len(pairs))


def _epoch_batches(rng: np.random.Generator, corpus: Corpus, batch_size: int) -> List[List[DialoguePair]]:
    order = rng.permutation(len(corpus))
    return [[corpus[int(i)] for i in order[s:s + batch_size]] for s in range(0, len(order), batch_size)]


def pretrain_direction(
    model: ECMModel,
    train: Corpus,
    direction: Direction,
    epochs: int,
    lr: float,
    batch_size: int,
    seed: int,
    grad_clip: Optional[float] = None,
    valid: Optional[Corpus] = None,
    log: Optional[TrainingLog] = None,
) -> ECMModel:
    """Train one direction by teacher forcing for a fixed number of epochs."""
    optimizer = build_optimizer(model, lr)
    rng = np.random.default_rng(seed)
    for epoch in range(epochs):
        losses = [mle_update(model, optimizer, batch, direction, grad_clip).total for batch in _epoch_batches(rng, train, batch_size)]
        record = {"phase": "pretrain", "direction": direction.value, "epoch": epoch + 1, "train_loss": float(np.mean(losses))}
        if valid is not None and len(valid):
            model.eval()
            record["valid_loss"] = mean_loss(model, valid.pairs, direction)
        logger.info(
            f"Pretrain {direction.value} epoch {epoch + 1}/{epochs}: train loss {record['train_loss']:.4f}"
            + (f", valid loss {record['valid_loss']:.4f}" if "valid_loss" in record else "")
        )
        if log is not None:
            log.write(record)
    model.eval()
    return model


def pretrain(
    train: Corpus,
    vocab: Vocabulary,
    lexicon: EmotionLexicon,
    config: RunConfig,
    valid: Optional[Corpus] = None,
    log: Optional[TrainingLog] = None,
) -> PretrainResult:
    """
    Pretrain the forward model on (q, r, e_r), the backward model on (r, q, e_q)
    and the classifier on every labelled utterance.
    """
    if len(train) == 0:
        raise ValueError("Cannot pretrain on an empty corpus")
    seeds = config.seeds()
    model_config = model_config_for(config, vocab)
    trainer = config.trainer

    models = {}
    for direction, init_key in ((Direction.FORWARD, "forward_init"), (Direction.BACKWARD, "backward_init")):
        model = init_model(model_config, seeds[init_key], lexicon, vocab)
        models[direction] = pretrain_direction(
            model, train, direction,
            epochs=trainer.pretrain_epochs,
            lr=trainer.pretrain_lr,
            batch_size=trainer.batch_size,
            seed=seeds[init_key],
            grad_clip=trainer.grad_clip,
            valid=valid,
            log=log,
        )

    classifier = train_classifier(train, config.classifier, seeds["classifier"], len(vocab), valid=valid)
    report_on = valid if valid is not None and len(valid) else train
    logger.info(f"Classifier accuracy: {accuracy(classifier, report_on):.4f}")
    logger.info(f"ACC(f) {category_accuracy(classifier, report_on, Direction.FORWARD)}")
    logger.info(f"ACC(b) {category_accuracy(classifier, report_on, Direction.BACKWARD)}")
    logger.info(f"Lex. size {lexicon.sizes()}")

    return PretrainResult(forward=models[Direction.FORWARD], backward=models[Direction.BACKWARD], classifier=classifier)
