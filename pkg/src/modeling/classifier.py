"""TextCNN sentence emotion classifier."""

import logging
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import torch
import torch.nn.functional as F
from torch import nn

from ..corpus.vocabulary import Vocabulary
from ..exceptions import CheckpointMismatchError
from ..models import ClassifierConfig, Corpus, Direction, EmotionCategory, Utterance
from ..storage import CheckpointStore
from .batching import pad_sequences, utterance_ids
from .utils import seeded

logger = logging.getLogger(__name__)


class EmotionClassifier(nn.Module):
    """Convolutions of widths {2,3,4} over word embeddings, max-pooled, then a linear layer."""

    def __init__(self, config: ClassifierConfig, vocab_size: int):
        super().__init__()
        self.config = config
        self.vocab_size = vocab_size
        self.embedding = nn.Embedding(vocab_size, config.embedding_dim, padding_idx=Vocabulary.PAD_ID)
        self.convs = nn.ModuleList(
            nn.Conv1d(config.embedding_dim, config.num_filters, width) for width in config.filter_widths
        )
        self.dropout = nn.Dropout(config.dropout)
        self.output = nn.Linear(config.num_filters * len(config.filter_widths), config.num_classes)

    @property
    def device(self) -> torch.device:
        return self.embedding.weight.device

    def forward(self, ids: torch.Tensor, lengths: torch.Tensor) -> torch.Tensor:
        """Logits (B, num_classes) for right-padded ids."""
        max_width = max(self.config.filter_widths)
        if ids.size(1) < max_width:
            ids = F.pad(ids, (0, max_width - ids.size(1)), value=Vocabulary.PAD_ID)
        embedded = self.embedding(ids).transpose(1, 2)           # (B, E, L)
        lengths = lengths.to(ids.device)

        pooled = []
        for width, conv in zip(self.config.filter_widths, self.convs):
            features = F.relu(conv(embedded))                      # (B, F, L - w + 1)
            positions = torch.arange(features.size(2), device=ids.device)
            # windows that start inside the sentence; short sentences keep window 0
            valid = positions.unsqueeze(0) <= (lengths - width).clamp_min(0).unsqueeze(1)
            features = features.masked_fill(~valid.unsqueeze(1), float("-inf"))
            pooled.append(features.max(dim=2).values)
        return self.output(self.dropout(torch.cat(pooled, dim=1)))


def _training_pool(corpus: Corpus) -> List[Tuple[List[int], int]]:
    """Every query with e_q and every response with e_r."""
    pool = []
    for pair in corpus:
        pool.append((utterance_ids(pair.query), int(pair.q_emotion)))
        pool.append((utterance_ids(pair.response), int(pair.r_emotion)))
    return pool


def _batch_logits(cls: EmotionClassifier, sequences: Sequence[Sequence[int]]) -> torch.Tensor:
    batch = pad_sequences(sequences, cls.device)
    return cls(batch.ids, batch.lengths)


def _pool_accuracy(cls: EmotionClassifier, pool: List[Tuple[List[int], int]], batch_size: int) -> float:
    if not pool:
        return 0.0
    correct = 0
    for start in range(0, len(pool), batch_size):
        chunk = pool[start:start + batch_size]
        probs = predict_proba_batch(cls, [ids for ids, _ in chunk])
        correct += int((probs.argmax(axis=1) == np.array([label for _, label in chunk])).sum())
    return correct / len(pool)


def train_classifier(
    corpus: Corpus,
    config: ClassifierConfig,
    seed: int,
    vocab_size: int,
    valid: Optional[Corpus] = None,
) -> EmotionClassifier:
    """
    Train the classifier on all labelled utterances of a corpus.

    Early stopping keeps the parameters with the best held-out accuracy. The
    held-out pool is the given validation corpus, or a holdout_fraction slice of
    the training pool.

    Raises:
        ValueError: the corpus carries a single emotion class
    """
    pool = _training_pool(corpus)
    labels = {label for _, label in pool}
    if len(labels) < 2:
        raise ValueError(f"Cannot train an emotion classifier on a single-class corpus (labels: {sorted(labels)})")

    rng = np.random.default_rng(seed)
    if valid is not None and len(valid):
        train_pool, holdout = pool, _training_pool(valid)
    else:
        order = rng.permutation(len(pool))
        n_holdout = max(1, int(round(config.holdout_fraction * len(pool))))
        holdout = [pool[i] for i in order[:n_holdout]]
        train_pool = [pool[i] for i in order[n_holdout:]]

    with seeded(seed):
        cls = EmotionClassifier(config, vocab_size)
        optimizer = torch.optim.Adam(cls.parameters(), lr=config.learning_rate)

        best_acc = -1.0
        best_state = {k: v.clone() for k, v in cls.state_dict().items()}
        stale = 0
        for epoch in range(config.epochs):
            cls.train()
            order = rng.permutation(len(train_pool))
            total_loss = 0.0
            for start in range(0, len(order), config.batch_size):
                chunk = [train_pool[i] for i in order[start:start + config.batch_size]]
                logits = _batch_logits(cls, [ids for ids, _ in chunk])
                target = torch.as_tensor([label for _, label in chunk], dtype=torch.long, device=cls.device)
                loss = F.cross_entropy(logits, target)
                optimizer.zero_grad()
                loss.backward()
                optimizer.step()
                total_loss += float(loss) * len(chunk)

            acc = _pool_accuracy(cls, holdout, config.batch_size)
            logger.info(
                f"Classifier epoch {epoch + 1}/{config.epochs}: "
                f"loss={total_loss / max(1, len(train_pool)):.4f} held-out acc={acc:.4f}"
            )
            if acc > best_acc:
                best_acc = acc
                best_state = {k: v.clone() for k, v in cls.state_dict().items()}
                stale = 0
            else:
                stale += 1
                if stale >= config.patience:
                    logger.info(f"Classifier early stop after epoch {epoch + 1}")
                    break

    cls.load_state_dict(best_state)
    cls.eval()
    for param in cls.parameters():
        param.requires_grad_(False)
    return cls


@torch.no_grad()
def predict_proba_batch(cls: EmotionClassifier, sequences: Sequence[Sequence[int]]) -> np.ndarray:
    """(B, 6) class probabilities; dropout is off."""
    if any(len(s) == 0 for s in sequences):
        raise ValueError("Cannot classify an empty utterance")
    was_training = cls.training
    cls.eval()
    probs = torch.softmax(_batch_logits(cls, sequences).double(), dim=-1).cpu().numpy()
    cls.train(was_training)
    return probs


def predict_proba(cls: EmotionClassifier, utterance: Utterance) -> np.ndarray:
    """Probability vector over the six categories, indexed by EmotionCategory id."""
    if len(utterance) == 0:
        raise ValueError("Cannot classify an empty utterance")
    return predict_proba_batch(cls, [utterance_ids(utterance)])[0]


def predict_emotion(cls: EmotionClassifier, utterance: Utterance) -> EmotionCategory:
    return EmotionCategory(int(np.argmax(predict_proba(cls, utterance))))


def confidence(cls: EmotionClassifier, utterance: Utterance, gold: EmotionCategory) -> float:
    """Probability the classifier assigns to the gold category."""
    return float(predict_proba(cls, utterance)[int(gold)])


def _labelled_side(corpus: Corpus, side: Optional[Direction]) -> List[Tuple[Utterance, EmotionCategory]]:
    items = []
    for pair in corpus:
        if side in (None, Direction.FORWARD):
            items.append((pair.response, pair.r_emotion))
        if side in (None, Direction.BACKWARD):
            items.append((pair.query, pair.q_emotion))
    return items


def _predictions(cls: EmotionClassifier, items: List[Tuple[Utterance, EmotionCategory]], batch_size: int = 256) -> np.ndarray:
    predictions = []
    for start in range(0, len(items), batch_size):
        chunk = items[start:start + batch_size]
        predictions.append(predict_proba_batch(cls, [utterance_ids(u) for u, _ in chunk]).argmax(axis=1))
    return np.concatenate(predictions)


def accuracy(cls: EmotionClassifier, corpus: Corpus, side: Optional[Direction] = None) -> float:
    """
    Fraction of utterances whose argmax matches the gold label.

    side=FORWARD scores responses against e_r, BACKWARD queries against e_q,
    None both.
    """
    items = _labelled_side(corpus, side)
    if not items:
        raise ValueError("Cannot compute accuracy on an empty corpus")
    gold = np.array([int(e) for _, e in items])
    return float((_predictions(cls, items) == gold).mean())


def category_accuracy(cls: EmotionClassifier, corpus: Corpus, side: Direction) -> Dict[str, float]:
    """Accuracy per non-Neutral category; categories absent from the corpus are omitted."""
    items = _labelled_side(corpus, side)
    if not items:
        raise ValueError("Cannot compute accuracy on an empty corpus")
    gold = np.array([int(e) for _, e in items])
    predicted = _predictions(cls, items)
    result = {}
    for category in EmotionCategory:
        if category is EmotionCategory.NEUTRAL:
            continue
        selected = gold == int(category)
        if selected.any():
            result[category.label] = float((predicted[selected] == gold[selected]).mean())
    return result


def save_classifier(cls: EmotionClassifier, store: CheckpointStore, name: str, vocab_hash: str) -> str:
    metadata = {
        "kind": "classifier",
        "config": cls.config.model_dump(mode="json"),
        "vocab_size": cls.vocab_size,
        "vocab_hash": vocab_hash,
    }
    return store.save(name, cls.state_dict(), metadata)


def load_classifier(store: CheckpointStore, name: str, vocab_hash: Optional[str] = None) -> EmotionClassifier:
    state, metadata = store.load(name)
    if metadata.get("kind") != "classifier":
        raise CheckpointMismatchError(f"Checkpoint {name} is a {metadata.get('kind')!r} checkpoint, not classifier")
    if vocab_hash is not None and metadata.get("vocab_hash") != vocab_hash:
        raise CheckpointMismatchError(
            f"Classifier {name} was written for vocabulary {metadata.get('vocab_hash')}, expected {vocab_hash}"
        )
    cls = EmotionClassifier(ClassifierConfig.model_validate(metadata["config"]), metadata["vocab_size"])
    cls.load_state_dict(state)
    cls.eval()
    for param in cls.parameters():
        param.requires_grad_(False)
    return cls
