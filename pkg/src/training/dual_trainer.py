"""Curriculum dual learning: alternating REINFORCE updates with teacher forcing."""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
import torch
from torch import nn

from ..config import RunConfig
from ..corpus.vocabulary import Vocabulary
from ..exceptions import CheckpointError, TrainingCollapseError, TrainingDivergedError
from ..models import Corpus, DialoguePair, Direction, EmotionLexicon, LossBreakdown, RewardBreakdown
from ..modeling.batching import make_pair_batch, pad_sequences
from ..modeling.classifier import EmotionClassifier, predict_proba_batch
from ..modeling.ecm import ECMModel, build_optimizer, decode_pairs, load_model, mle_update, save_model
from ..modeling.utils import make_generator, parameter_hash
from ..curriculum import RankedDataset, competence, rank_by_difficulty, sample_batch
from ..rewards import RewardScorer
from ..storage import CheckpointStore, LocalCheckpointStore
from .log import TrainingLog
from .pretrain import mean_token_nll

logger = logging.getLogger(__name__)

REFERENCE_PAIRS = 256


def policy_gradient_loss(log_probs: torch.Tensor, advantages: torch.Tensor) -> torch.Tensor:
    """-mean(A * log p); advantages carry no gradient."""
    return -(advantages.detach().to(log_probs.dtype) * log_probs).mean()


@dataclass
class StepResult:
    """Outcome of one RL + teacher-forcing update for one direction."""
    direction: Direction
    rewards: List[RewardBreakdown]
    rl_loss: float
    teacher_forcing: LossBreakdown
    token_nll: float
    skipped: int = 0
    hashes: Dict[str, str] = field(default_factory=dict)

    def mean(self, name: str) -> float:
        values = [getattr(r, name) for r in self.rewards]
        return float(np.mean(values)) if values else 0.0

    def trace(self) -> Dict[str, float]:
        return {name: self.mean(name) for name in ("r_e1", "r_e2", "r_c", "r_e", "total", "baseline", "advantage")}


@dataclass
class TrainState:
    """Mutable state of a CDL run."""
    config: RunConfig
    forward: ECMModel
    backward: ECMModel
    classifier: EmotionClassifier
    scorer: RewardScorer
    ranked: Dict[Direction, RankedDataset]
    optimizers: Dict[Direction, torch.optim.Optimizer]
    reference_nll: Dict[Direction, float]
    log: TrainingLog
    step: int = 0
    best_score: float = -1.0
    stale: int = 0
    curve: List[Tuple[int, float]] = field(default_factory=list)
    trace_hashes: bool = False

    def model(self, direction: Direction) -> ECMModel:
        return self.forward if direction is Direction.FORWARD else self.backward


def rl_step(state: TrainState, direction: Direction, batch: Sequence[DialoguePair]) -> StepResult:
    """
    One policy-gradient update of the direction's model followed by one teacher-forcing update.

    The dual model and the classifier are only read. Samples with a non-finite
    log-probability or advantage are skipped and counted.
    """
    model, dual = state.model(direction), state.model(direction.dual)
    trainer = state.config.trainer
    optimizer = state.optimizers[direction]
    seeds = state.config.seeds()

    hashes = {}
    if state.trace_hashes:
        hashes["dual_before"] = parameter_hash(dual)
        hashes["classifier_before"] = parameter_hash(state.classifier)

    pairs = make_pair_batch(batch, direction, model.device)
    model.eval()
    generator = make_generator(seeds[f"{direction.value}_sampling"], state.step)
    sampled = model.generate(pairs.source, pairs.target_emotions, greedy=False,
                             temperature=trainer.sample_temperature, generator=generator)
    greedy = model.generate(pairs.source, pairs.target_emotions, greedy=True)

    sampled_scores = state.scorer.score(sampled.sequences, batch, direction, dual)
    greedy_scores = state.scorer.score(greedy.sequences, batch, direction, dual)
    baselines = [b.total for b in greedy_scores.breakdowns(state.config.reward)]
    rewards = sampled_scores.breakdowns(state.config.reward, baselines)

    model.train()
    target = pad_sequences(sampled.sequences, model.device)
    log_probs = model.sequence_logprob(pairs.source, target, pairs.target_emotions)
    advantages = torch.as_tensor([r.advantage for r in rewards], dtype=log_probs.dtype, device=log_probs.device)
    keep = torch.isfinite(log_probs.detach()) & torch.isfinite(advantages)
    skipped = int((~keep).sum())
    if skipped:
        logger.warning(f"Step {state.step} {direction.value}: skipped {skipped} non-finite samples")

    rl_loss = 0.0
    if bool(keep.any()):
        loss = policy_gradient_loss(log_probs[keep], advantages[keep])
        optimizer.zero_grad()
        loss.backward()
        nn.utils.clip_grad_norm_(model.parameters(), trainer.grad_clip)
        optimizer.step()
        rl_loss = float(loss)

    teacher_forcing = mle_update(model, optimizer, batch, direction, trainer.grad_clip)
    scored_tokens = float(np.mean([len(p.target(direction)) + 1 for p in batch]))
    token_nll = teacher_forcing.nll / scored_tokens

    reference = state.reference_nll.get(direction)
    if reference is not None and token_nll > trainer.collapse_factor * reference:
        raise TrainingCollapseError(
            "Teacher-forcing NLL exceeded the collapse threshold",
            {"step": state.step, "direction": direction.value, "token_nll": token_nll,
             "reference": reference, "factor": trainer.collapse_factor},
        )

    if state.trace_hashes:
        hashes["dual_after"] = parameter_hash(dual)
        hashes["classifier_after"] = parameter_hash(state.classifier)

    return StepResult(
        direction=direction,
        rewards=rewards,
        rl_loss=rl_loss,
        teacher_forcing=teacher_forcing,
        token_nll=token_nll,
        skipped=skipped,
        hashes=hashes,
    )


def rl_step_forward(state: TrainState, batch: Sequence[DialoguePair]) -> StepResult:
    return rl_step(state, Direction.FORWARD, batch)


def rl_step_backward(state: TrainState, batch: Sequence[DialoguePair]) -> StepResult:
    return rl_step(state, Direction.BACKWARD, batch)


def validation_emotion_accuracy(
    model: ECMModel,
    classifier: EmotionClassifier,
    pairs: Sequence[DialoguePair],
    batch_size: int = 64,
) -> float:
    """Share of greedy responses the classifier assigns to the pair's e_r."""
    if not pairs:
        raise ValueError("Cannot validate on an empty corpus")
    outputs = decode_pairs(model, pairs, Direction.FORWARD, batch_size)
    nonempty = [i for i, seq in enumerate(outputs) if seq]
    if not nonempty:
        return 0.0
    predicted = predict_proba_batch(classifier, [outputs[i] for i in nonempty]).argmax(axis=1)
    correct = sum(int(predicted[row]) == int(pairs[i].r_emotion) for row, i in enumerate(nonempty))
    return correct / len(pairs)


# ---------------------------------------------------------------------------
# Checkpointing
# ---------------------------------------------------------------------------

def _save_models(state: TrainState, store: CheckpointStore, prefix: str, vocab_hash: str) -> None:
    save_model(state.forward, store, f"{prefix}/forward", vocab_hash, Direction.FORWARD, state.step)
    save_model(state.backward, store, f"{prefix}/backward", vocab_hash, Direction.BACKWARD, state.step)


def _save_progress(state: TrainState, store: CheckpointStore, vocab_hash: str) -> None:
    _save_models(state, store, "last", vocab_hash)
    progress = {
        "forward_optimizer": state.optimizers[Direction.FORWARD].state_dict(),
        "backward_optimizer": state.optimizers[Direction.BACKWARD].state_dict(),
    }
    store.save("last/progress", progress, {
        "kind": "progress",
        "step": state.step,
        "best_score": state.best_score,
        "stale": state.stale,
        "curve": state.curve,
        "reference_nll": {d.value: v for d, v in state.reference_nll.items()},
        "vocab_hash": vocab_hash,
    })


def _restore_progress(state: TrainState, store: LocalCheckpointStore, vocab_hash: str) -> None:
    if not store.exists("last/progress"):
        raise CheckpointError(f"No resumable state: expected {store.base_path / 'last' / 'progress.pt'}")
    forward, _ = load_model(store, "last/forward", vocab_hash, state.forward.config)
    backward, _ = load_model(store, "last/backward", vocab_hash, state.backward.config)
    state.forward.load_state_dict(forward.state_dict())
    state.backward.load_state_dict(backward.state_dict())

    progress, meta = store.load("last/progress")
    state.optimizers[Direction.FORWARD].load_state_dict(progress["forward_optimizer"])
    state.optimizers[Direction.BACKWARD].load_state_dict(progress["backward_optimizer"])
    state.step = int(meta["step"])
    state.best_score = float(meta["best_score"])
    state.stale = int(meta["stale"])
    state.curve = [(int(s), float(v)) for s, v in meta["curve"]]
    state.reference_nll = {Direction(k): float(v) for k, v in meta["reference_nll"].items()}
    logger.info(f"Resumed from step {state.step} (best validation Emotion-acc {state.best_score:.4f})")


@dataclass
class TrainingResult:
    forward: ECMModel
    backward: ECMModel
    steps: int
    best_score: float
    curve: List[Tuple[int, float]]
    log_path: Optional[Path]
    stopped_early: bool


def build_state(
    train: Corpus,
    config: RunConfig,
    vocab: Vocabulary,
    lexicon: EmotionLexicon,
    forward: ECMModel,
    backward: ECMModel,
    classifier: EmotionClassifier,
    log: TrainingLog,
) -> TrainState:
    """Rank both directions, create the optimizers and take the collapse-guard references."""
    classifier.eval()
    for param in classifier.parameters():
        param.requires_grad_(False)

    reference_pairs = train.pairs[:REFERENCE_PAIRS]
    forward.eval()
    backward.eval()
    reference = {
        Direction.FORWARD: mean_token_nll(forward, reference_pairs, Direction.FORWARD),
        Direction.BACKWARD: mean_token_nll(backward, reference_pairs, Direction.BACKWARD),
    }
    return TrainState(
        config=config,
        forward=forward,
        backward=backward,
        classifier=classifier,
        scorer=RewardScorer(classifier, lexicon, vocab, config.reward, config.trainer.reward_workers),
        ranked={
            Direction.FORWARD: rank_by_difficulty(train, classifier, Direction.FORWARD),
            Direction.BACKWARD: rank_by_difficulty(train, classifier, Direction.BACKWARD),
        },
        optimizers={
            Direction.FORWARD: build_optimizer(forward, config.trainer.cdl_lr),
            Direction.BACKWARD: build_optimizer(backward, config.trainer.cdl_lr),
        },
        reference_nll=reference,
        log=log,
    )


def _step_record(state: TrainState, result: StepResult) -> Dict:
    ranked = state.ranked[result.direction]
    record = {
        "step": state.step,
        "direction": result.direction.value,
        "competence": competence(state.step, state.config.curriculum),
        "frontier": ranked.frontier(state.step, state.config.curriculum),
        "rl_loss": result.rl_loss,
        "tf_loss": result.teacher_forcing.total,
        "tf_token_nll": result.token_nll,
        "skipped": result.skipped,
    }
    record.update(result.trace())
    if result.hashes:
        record["hashes"] = result.hashes
    return record


def run_training(
    train: Corpus,
    valid: Corpus,
    vocab: Vocabulary,
    lexicon: EmotionLexicon,
    config: RunConfig,
    forward: ECMModel,
    backward: ECMModel,
    classifier: EmotionClassifier,
    out_dir: Path,
    resume_from: Optional[Path] = None,
    trace_hashes: bool = False,
) -> TrainingResult:
    """
    Run curriculum dual learning from pretrained models.

    Each step performs a forward RL update, a forward teacher-forcing update, a
    backward RL update and a backward teacher-forcing update, in that order.
    Validation Emotion-acc is measured every validation_interval steps; the best
    models go to best/, the latest state to last/, the end state to final/.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    store = LocalCheckpointStore(out_dir)
    vocab_hash = vocab.fingerprint()
    trainer = config.trainer
    seeds = config.seeds()

    meta = config.to_meta()
    meta["vocab_hash"] = vocab_hash
    (out_dir / "meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True), encoding="utf-8")

    log_path = out_dir / "train_log.jsonl"
    log = TrainingLog(log_path, append=resume_from is not None)
    classifier_hash = parameter_hash(classifier)
    state = build_state(train, config, vocab, lexicon, forward, backward, classifier, log)
    state.trace_hashes = trace_hashes
    if resume_from is not None:
        _restore_progress(state, LocalCheckpointStore(Path(resume_from)), vocab_hash)

    valid_pairs = valid.pairs[:trainer.validation_size] if trainer.validation_size else valid.pairs
    stopped_early = False
    try:
        while state.step < trainer.max_cdl_steps:
            state.step += 1
            for direction in (Direction.FORWARD, Direction.BACKWARD):
                batch = sample_batch(
                    state.ranked[direction], train, state.step, trainer.batch_size,
                    seeds[f"{direction.value}_curriculum"], config.curriculum,
                )
                result = rl_step(state, direction, batch)
                log.write(_step_record(state, result))

            if state.step % trainer.validation_interval == 0 and valid_pairs:
                score = validation_emotion_accuracy(state.forward, classifier, valid_pairs)
                state.curve.append((state.step, score))
                log.write({"step": state.step, "phase": "validation", "valid_emotion_acc": score})
                logger.info(f"Step {state.step}: validation Emotion-acc {score:.4f} (best {state.best_score:.4f})")
                if score > state.best_score:
                    state.best_score = score
                    state.stale = 0
                    _save_models(state, store, "best", vocab_hash)
                else:
                    state.stale += 1
                _save_progress(state, store, vocab_hash)
                if state.stale >= trainer.patience:
                    logger.info(f"Validation Emotion-acc stagnated for {state.stale} evaluations; stopping")
                    stopped_early = True
                    break
    except TrainingDivergedError:
        logger.error(f"Training stopped at step {state.step}", exc_info=True)
        _save_models(state, store, "diverged", vocab_hash)
        raise
    finally:
        log.close()

    if parameter_hash(classifier) != classifier_hash:
        raise TrainingDivergedError("Classifier parameters changed during training")

    _save_models(state, store, "final", vocab_hash)
    if not store.exists("best/forward"):
        _save_models(state, store, "best", vocab_hash)
    pd.DataFrame(state.curve, columns=["step", "valid_emotion_acc"]).to_csv(out_dir / "valid_curve.csv", index=False)
    logger.info(f"CDL finished after {state.step} steps; best validation Emotion-acc {state.best_score:.4f}")

    return TrainingResult(
        forward=state.forward,
        backward=state.backward,
        steps=state.step,
        best_score=state.best_score,
        curve=state.curve,
        log_path=log_path,
        stopped_early=stopped_early,
    )
