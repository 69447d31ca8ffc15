"""Pretraining and curriculum dual learning."""

from .dual_trainer import (
    StepResult,
    TrainState,
    TrainingResult,
    build_state,
    policy_gradient_loss,
    rl_step,
    rl_step_backward,
    rl_step_forward,
    run_training,
    validation_emotion_accuracy,
)
from .log import TrainingLog, read_log
from .pretrain import PretrainResult, mean_loss, mean_token_nll, model_config_for, pretrain, pretrain_direction

__all__ = [
    "StepResult", "TrainState", "TrainingResult", "build_state", "policy_gradient_loss", "rl_step",
    "rl_step_backward", "rl_step_forward", "run_training", "validation_emotion_accuracy",
    "TrainingLog", "read_log", "PretrainResult", "mean_loss", "mean_token_nll", "model_config_for",
    "pretrain", "pretrain_direction",
]
