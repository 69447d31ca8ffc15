"""Pydantic models for corpus records, hyper-parameters and training reports."""

from enum import Enum
from typing import Dict, FrozenSet, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .exceptions import EmotionLabelError


class EmotionCategory(int, Enum):
    """The six emotion categories, with fixed ids."""
    NEUTRAL = 0
    LIKE = 1
    SAD = 2
    DISGUST = 3
    ANGRY = 4
    HAPPY = 5

    @property
    def label(self) -> str:
        """Surface name as it appears in corpus files ("Happy", "Neutral", ...)."""
        return self.name.capitalize()

    @classmethod
    def from_name(cls, name: str) -> "EmotionCategory":
        """Parse a category name, case-insensitively."""
        try:
            return cls[name.strip().upper()]
        except (KeyError, AttributeError):
            raise EmotionLabelError(f"Unknown emotion category: {name!r}") from None

    @classmethod
    def coerce(cls, value) -> "EmotionCategory":
        """Accept a category, its id, or its name."""
        if isinstance(value, cls):
            return value
        if isinstance(value, str):
            return cls.from_name(value)
        try:
            return cls(int(value))
        except (ValueError, TypeError):
            raise EmotionLabelError(f"Unknown emotion category: {value!r}") from None


EMOTIONS: Tuple[EmotionCategory, ...] = tuple(EmotionCategory)


class Direction(str, Enum):
    """Forward generates responses from queries; backward generates queries from responses."""
    FORWARD = "forward"
    BACKWARD = "backward"

    @property
    def dual(self) -> "Direction":
        return Direction.BACKWARD if self is Direction.FORWARD else Direction.FORWARD


class Split(str, Enum):
    TRAIN = "train"
    VALID = "valid"
    TEST = "test"


class Ablation(str, Enum):
    """Training variants: full CDL, emotion reward only, content reward only, no curriculum."""
    FULL = "full"
    EMO = "emo"
    CON = "con"
    DL = "dl"


class Utterance(BaseModel):
    """A tokenized sentence, optionally encoded to vocabulary ids."""
    model_config = ConfigDict(frozen=True)

    tokens: Tuple[str, ...]
    ids: Optional[Tuple[int, ...]] = None

    def __len__(self) -> int:
        return len(self.tokens)

    @property
    def text(self) -> str:
        return " ".join(self.tokens)


class DialoguePair(BaseModel):
    """One labelled (query, response) sample."""
    model_config = ConfigDict(frozen=True)

    query: Utterance
    response: Utterance
    q_emotion: EmotionCategory
    r_emotion: EmotionCategory
    index: int = Field(..., ge=0, description="Stable position in the owning corpus")

    @field_validator("q_emotion", "r_emotion", mode="before")
    @classmethod
    def parse_emotion(cls, v):
        return EmotionCategory.coerce(v)

    def source(self, direction: Direction) -> Utterance:
        return self.query if direction is Direction.FORWARD else self.response

    def target(self, direction: Direction) -> Utterance:
        return self.response if direction is Direction.FORWARD else self.query

    def source_emotion(self, direction: Direction) -> EmotionCategory:
        return self.q_emotion if direction is Direction.FORWARD else self.r_emotion

    def target_emotion(self, direction: Direction) -> EmotionCategory:
        return self.r_emotion if direction is Direction.FORWARD else self.q_emotion


class Corpus(BaseModel):
    """Ordered collection of dialogue pairs belonging to one split."""
    model_config = ConfigDict(frozen=True)

    pairs: Tuple[DialoguePair, ...]
    split: Split = Split.TRAIN
    dropped: int = Field(default=0, ge=0, description="Pairs rejected by the length bounds")

    @model_validator(mode="after")
    def check_indices(self) -> "Corpus":
        for position, pair in enumerate(self.pairs):
            if pair.index != position:
                raise ValueError(
                    f"Corpus indices must be 0..N-1 without gaps: "
                    f"found index {pair.index} at position {position}"
                )
        return self

    def __len__(self) -> int:
        return len(self.pairs)

    def __iter__(self):
        return iter(self.pairs)

    def __getitem__(self, i: int) -> DialoguePair:
        return self.pairs[i]


class EmotionLexicon(BaseModel):
    """Per-category emotion word sets; Neutral always maps to the empty set."""
    model_config = ConfigDict(frozen=True)

    words: Dict[EmotionCategory, FrozenSet[str]] = Field(default_factory=dict)

    @model_validator(mode="after")
    def fill_categories(self) -> "EmotionLexicon":
        for category in EMOTIONS:
            self.words.setdefault(category, frozenset())
        if self.words[EmotionCategory.NEUTRAL]:
            raise ValueError("Neutral must map to the empty set")
        return self

    def get(self, category: EmotionCategory) -> FrozenSet[str]:
        return self.words[EmotionCategory.coerce(category)]

    def category_of(self, token: str) -> Optional[EmotionCategory]:
        for category, words in self.words.items():
            if token in words:
                return category
        return None

    def sizes(self) -> Dict[str, int]:
        """Cardinality per non-Neutral category, keyed by name."""
        return {c.label: len(self.words[c]) for c in EMOTIONS if c is not EmotionCategory.NEUTRAL}


# ---------------------------------------------------------------------------
# Hyper-parameters
# ---------------------------------------------------------------------------

class ModelConfig(BaseModel):
    """Shape of one ECM encoder-decoder."""
    model_config = ConfigDict(extra="forbid", frozen=True)

    vocab_size: int = Field(default=40004, gt=4)
    num_emotions: int = Field(default=6, ge=1)
    embedding_dim: int = Field(default=100, gt=0)
    emotion_dim: int = Field(default=100, gt=0)
    hidden_size: int = Field(default=256, gt=0)
    encoder_layers: int = Field(default=2, gt=0)
    decoder_layers: int = Field(default=2, gt=0)
    max_decode_length: int = Field(default=30, gt=0)
    min_decode_length: int = Field(default=3, ge=0)

    @model_validator(mode="after")
    def check_lengths(self) -> "ModelConfig":
        if self.min_decode_length > self.max_decode_length:
            raise ValueError("min_decode_length must not exceed max_decode_length")
        return self


class ClassifierConfig(BaseModel):
    """TextCNN sentence emotion classifier."""
    model_config = ConfigDict(extra="forbid", frozen=True)

    filter_widths: Tuple[int, ...] = (2, 3, 4)
    num_filters: int = Field(default=64, gt=0)
    embedding_dim: int = Field(default=100, gt=0)
    num_classes: int = Field(default=6, ge=6, le=6)
    dropout: float = Field(default=0.5, ge=0.0, lt=1.0)
    epochs: int = Field(default=10, ge=0)
    batch_size: int = Field(default=64, ge=1)
    learning_rate: float = Field(default=1e-3, gt=0.0)
    patience: int = Field(default=3, ge=1, description="Epochs without held-out improvement before stopping")
    holdout_fraction: float = Field(default=0.1, gt=0.0, lt=1.0)

    @field_validator("filter_widths")
    @classmethod
    def positive_widths(cls, v: Tuple[int, ...]) -> Tuple[int, ...]:
        if not v or any(w <= 0 for w in v):
            raise ValueError("filter widths must be positive")
        return v


class RewardConfig(BaseModel):
    """Weights of the combined reward R = R_c + gamma * (R_e1 + lambda * R_e2)."""
    model_config = ConfigDict(extra="forbid", frozen=True, populate_by_name=True)

    explicit_weight: float = Field(default=0.5, ge=0.0, alias="lambda")
    emotion_weight: float = Field(default=1.0, ge=0.0, alias="gamma")
    content_enabled: bool = True


class CurriculumConfig(BaseModel):
    """Competence schedule f(t)."""
    model_config = ConfigDict(extra="forbid", frozen=True)

    c0_squared: float = Field(default=0.01, gt=0.0, le=1.0)
    length: int = Field(default=100_000, ge=1, description="Curriculum length T")
    enabled: bool = True


class TrainerConfig(BaseModel):
    """Pretraining and curriculum dual learning schedule."""
    model_config = ConfigDict(extra="forbid", frozen=True)

    pretrain_epochs: int = Field(default=10, ge=0)
    pretrain_lr: float = Field(default=0.05, gt=0.0)
    cdl_lr: float = Field(default=1e-5, gt=0.0)
    batch_size: int = Field(default=64, ge=1)
    max_cdl_steps: int = Field(default=200_000, ge=0)
    validation_interval: int = Field(default=1000, ge=1)
    validation_size: Optional[int] = Field(default=None, ge=1, description="Cap on validation pairs per evaluation")
    patience: int = Field(default=5, ge=1)
    grad_clip: float = Field(default=5.0, gt=0.0)
    collapse_factor: float = Field(default=3.0, gt=1.0)
    sample_temperature: float = Field(default=1.0, gt=0.0)
    reward_workers: int = Field(default=2, ge=1)


# ---------------------------------------------------------------------------
# Training and evaluation records
# ---------------------------------------------------------------------------

class LossBreakdown(BaseModel):
    """Terms of the ECM training loss."""
    nll: float = Field(..., ge=0.0)
    type_loss: float = Field(..., ge=0.0)
    memory_reg: float = Field(..., ge=0.0)
    total: float = Field(..., ge=0.0)


class RewardBreakdown(BaseModel):
    """Reward components for one generated sequence."""
    r_e1: float = Field(..., ge=0.0, le=1.0)
    r_e2: float = Field(..., ge=0.0, le=1.0)
    r_e: float = Field(..., ge=0.0)
    r_c: float = Field(..., ge=0.0, le=1.0)
    total: float = Field(..., ge=0.0)
    baseline: float = 0.0
    advantage: float = 0.0


class EvalReport(BaseModel):
    """Automatic metrics, in the column order of the results table."""
    average: float = Field(..., ge=0.0, le=1.0)
    extrema: float = Field(..., ge=0.0, le=1.0)
    greedy: float = Field(..., ge=0.0, le=1.0)
    coherence: float = Field(..., ge=0.0, le=1.0)
    dist1: float = Field(..., ge=0.0, le=1.0)
    dist2: float = Field(..., ge=0.0, le=1.0)
    bleu1: float = Field(..., ge=0.0, le=1.0)
    bleu2: float = Field(..., ge=0.0, le=1.0)
    emo_acc: float = Field(..., ge=0.0, le=1.0)
    emo_word: float = Field(..., ge=0.0, le=1.0)
    n_pairs: int = 0
    skipped_pairs: int = Field(default=0, description="Pairs without in-vocabulary vectors on one side")
    vectors_source: str = "model-embedding"

    def metric_columns(self) -> List[Tuple[str, float]]:
        return [
            ("Avg.", self.average), ("Ext.", self.extrema), ("Gre.", self.greedy),
            ("Coh.", self.coherence), ("Dist-1", self.dist1), ("Dist-2", self.dist2),
            ("BLEU-1", self.bleu1), ("BLEU-2", self.bleu2),
            ("Emo-acc.", self.emo_acc), ("Emo-word.", self.emo_word),
        ]
