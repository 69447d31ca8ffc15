"""Batched reward scoring of generated sequences against a frozen classifier and dual model."""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Sequence

import numpy as np

from ..corpus.vocabulary import Vocabulary
from ..models import DialoguePair, Direction, EmotionLexicon, RewardBreakdown, RewardConfig, Utterance
from ..modeling.classifier import EmotionClassifier, predict_proba_batch
from ..modeling.ecm import ECMModel
from .functions import content_rewards, explicit_emotion_reward, reward_breakdown

logger = logging.getLogger(__name__)


@dataclass
class RewardScores:
    """Reward components for a batch, before baselines."""
    r_e1: np.ndarray
    r_e2: np.ndarray
    r_c: np.ndarray

    def breakdowns(self, config: RewardConfig, baselines: Sequence[float] = ()) -> List[RewardBreakdown]:
        baselines = list(baselines) or [0.0] * len(self.r_e1)
        return [
            reward_breakdown(e1, e2, c, config, baseline=b)
            for e1, e2, c, b in zip(self.r_e1, self.r_e2, self.r_c, baselines)
        ]


class RewardScorer:
    """
    Score generated sequences for one direction.

    Forward outputs r' are scored with the classifier and lexicon at e_r, and by
    the backward model reconstructing q under e_q. Backward outputs swap roles.
    Classifier and dual-model scoring run on separate worker threads; neither
    model is updated here.
    """

    def __init__(
        self,
        classifier: EmotionClassifier,
        lexicon: EmotionLexicon,
        vocab: Vocabulary,
        config: RewardConfig,
        workers: int = 2,
    ):
        self.classifier = classifier
        self.lexicon = lexicon
        self.vocab = vocab
        self.config = config
        self.workers = workers

    def _implicit(self, sequences: Sequence[Sequence[int]], pairs: Sequence[DialoguePair], direction: Direction) -> np.ndarray:
        scores = np.zeros(len(sequences))
        nonempty = [i for i, seq in enumerate(sequences) if seq]
        if len(nonempty) < len(sequences):
            logger.warning(f"{len(sequences) - len(nonempty)} empty generations scored with implicit reward 0")
        if nonempty:
            probs = predict_proba_batch(self.classifier, [sequences[i] for i in nonempty])
            for row, i in enumerate(nonempty):
                scores[i] = probs[row, int(pairs[i].target_emotion(direction))]
        return scores

    def _explicit(self, sequences: Sequence[Sequence[int]], pairs: Sequence[DialoguePair], direction: Direction) -> np.ndarray:
        return np.array([
            explicit_emotion_reward(
                self.lexicon,
                Utterance(tokens=tuple(self.vocab.decode(seq))),
                pair.target_emotion(direction),
            )
            for seq, pair in zip(sequences, pairs)
        ])

    def _content(
        self,
        dual_model: ECMModel,
        sequences: Sequence[Sequence[int]],
        pairs: Sequence[DialoguePair],
        direction: Direction,
    ) -> np.ndarray:
        if not self.config.content_enabled:
            return np.zeros(len(sequences))
        originals = [list(pair.source(direction).ids or ()) for pair in pairs]
        emotions = [pair.source_emotion(direction) for pair in pairs]
        return content_rewards(dual_model, originals, emotions, sequences).double().numpy()

    def score(
        self,
        sequences: Sequence[Sequence[int]],
        pairs: Sequence[DialoguePair],
        direction: Direction,
        dual_model: ECMModel,
    ) -> RewardScores:
        """Reward components for each generated sequence of a batch."""
        if len(sequences) != len(pairs):
            raise ValueError(f"{len(sequences)} sequences for {len(pairs)} pairs")

        with ThreadPoolExecutor(max_workers=self.workers) as executor:
            implicit_future = executor.submit(self._implicit, sequences, pairs, direction)
            content_future = executor.submit(self._content, dual_model, sequences, pairs, direction)
            explicit = self._explicit(sequences, pairs, direction)
            implicit = implicit_future.result()
            content = content_future.result()

        return RewardScores(
            r_e1=np.clip(implicit, 0.0, 1.0),
            r_e2=np.clip(explicit, 0.0, 1.0),
            r_c=np.clip(content, 0.0, 1.0),
        )
