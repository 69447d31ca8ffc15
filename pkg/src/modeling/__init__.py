"""Sequence models, the emotion classifier and their batching helpers."""

from .classifier import (
    EmotionClassifier,
    accuracy,
    category_accuracy,
    confidence,
    load_classifier,
    predict_emotion,
    predict_proba,
    predict_proba_batch,
    save_classifier,
    train_classifier,
)
from .ecm import (
    ECMModel,
    GenerationOutput,
    LossTerms,
    build_optimizer,
    ecm_loss_terms,
    forward_loss,
    generate_greedy,
    generate_sample,
    init_model,
    load_model,
    mle_update,
    save_model,
    sequence_logprob,
)
from .utils import make_generator, parameter_hash, seeded

__all__ = [
    "EmotionClassifier", "accuracy", "category_accuracy", "confidence", "load_classifier",
    "predict_emotion", "predict_proba", "predict_proba_batch", "save_classifier", "train_classifier",
    "ECMModel", "GenerationOutput", "LossTerms", "build_optimizer", "ecm_loss_terms", "forward_loss",
    "generate_greedy", "generate_sample", "init_model", "load_model", "mle_update", "save_model",
    "sequence_logprob", "make_generator", "parameter_hash", "seeded",
]
