"""Emotion, content and combined rewards for sampled sequences."""

import logging
import math
from typing import Sequence

import torch

from ..models import EmotionCategory, EmotionLexicon, RewardBreakdown, RewardConfig, Utterance
from ..modeling.batching import emotion_tensor, pad_sequences
from ..modeling.classifier import EmotionClassifier, predict_proba
from ..modeling.ecm import ECMModel

logger = logging.getLogger(__name__)


def _unit(value: float) -> float:
    return min(1.0, max(0.0, float(value)))


def implicit_emotion_reward(cls: EmotionClassifier, sentence: Utterance, emotion: EmotionCategory) -> float:
    """Classifier probability of the target emotion; 0 for an empty sentence."""
    if len(sentence) == 0:
        logger.warning("Scoring an empty sentence: implicit emotion reward set to 0")
        return 0.0
    return _unit(predict_proba(cls, sentence)[int(emotion)])


def explicit_emotion_reward(lexicon: EmotionLexicon, sentence: Utterance, emotion: EmotionCategory) -> float:
    """Share of tokens (repeats counted) that belong to the target category's lexicon."""
    if len(sentence) == 0:
        return 0.0
    words = lexicon.get(emotion)
    if not words:
        return 0.0
    hits = sum(1 for token in sentence.tokens if token in words)
    return _unit(hits / len(sentence))


def emotion_reward(r_e1: float, r_e2: float, config: RewardConfig) -> float:
    return r_e1 + config.explicit_weight * r_e2


def total_reward(r_c: float, r_e: float, config: RewardConfig) -> float:
    """R_c + gamma * R_e; the content term is dropped when content rewards are disabled."""
    content = r_c if config.content_enabled else 0.0
    return content + config.emotion_weight * r_e


def advantage(total_sampled: float, total_greedy: float) -> float:
    return total_sampled - total_greedy


@torch.no_grad()
def content_rewards(
    dual_model: ECMModel,
    originals: Sequence[Sequence[int]],
    original_emotions: Sequence[EmotionCategory],
    generated: Sequence[Sequence[int]],
) -> torch.Tensor:
    """
    Per-token geometric-mean probability of reconstructing each original from its generated partner.

    The scored length counts the closing EOS.
    """
    device = dual_model.device
    source = pad_sequences(generated, device)
    target = pad_sequences(originals, device)
    logp = dual_model.sequence_logprob(source, target, emotion_tensor(original_emotions, device))
    scored = (target.lengths.to(logp.device) + 1).to(logp.dtype)
    return torch.exp(logp / scored).clamp(0.0, 1.0).cpu()


def content_reward(
    dual_model: ECMModel,
    original: Utterance,
    original_emotion: EmotionCategory,
    generated: Utterance,
) -> float:
    """exp(log p(original | generated, original_emotion) / (|original| + 1))."""
    was_training = dual_model.training
    dual_model.eval()
    value = content_rewards(dual_model, [list(original.ids or ())], [original_emotion], [list(generated.ids or ())])
    dual_model.train(was_training)
    return _unit(value[0])


def reward_breakdown(
    r_e1: float,
    r_e2: float,
    r_c: float,
    config: RewardConfig,
    baseline: float = 0.0,
) -> RewardBreakdown:
    """Assemble a breakdown from the three bounded components."""
    r_e1, r_e2 = _unit(r_e1), _unit(r_e2)
    r_c = _unit(r_c) if config.content_enabled else 0.0
    r_e = emotion_reward(r_e1, r_e2, config)
    total = total_reward(r_c, r_e, config)
    if not math.isfinite(total):
        raise ValueError(f"Non-finite reward: r_e1={r_e1} r_e2={r_e2} r_c={r_c}")
    return RewardBreakdown(
        r_e1=r_e1, r_e2=r_e2, r_e=r_e, r_c=r_c, total=total,
        baseline=baseline, advantage=advantage(total, baseline),
    )
