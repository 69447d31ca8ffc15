"""Reward functions for curriculum dual learning."""

from .functions import (
    advantage,
    content_reward,
    content_rewards,
    emotion_reward,
    explicit_emotion_reward,
    implicit_emotion_reward,
    reward_breakdown,
    total_reward,
)
from .scorer import RewardScorer, RewardScores

__all__ = [
    "advantage", "content_reward", "content_rewards", "emotion_reward", "explicit_emotion_reward",
    "implicit_emotion_reward", "reward_breakdown", "total_reward", "RewardScorer", "RewardScores",
]
