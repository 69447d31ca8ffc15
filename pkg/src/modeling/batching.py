"""Padding and batching of encoded utterances."""

from dataclasses import dataclass
from typing import List, Optional, Sequence

import torch

from ..corpus.vocabulary import Vocabulary
from ..models import DialoguePair, Direction, EmotionCategory, Utterance


@dataclass
class SequenceBatch:
    """Right-padded id matrix with true lengths."""
    ids: torch.Tensor       # (B, L) long
    lengths: torch.Tensor   # (B,) long, on CPU

    @property
    def size(self) -> int:
        return self.ids.size(0)

    @property
    def mask(self) -> torch.Tensor:
        steps = torch.arange(self.ids.size(1), device=self.ids.device)
        return steps.unsqueeze(0) < self.lengths.to(self.ids.device).unsqueeze(1)


@dataclass
class PairBatch:
    """Source/target batch for one generation direction."""
    source: SequenceBatch
    target: SequenceBatch
    target_emotions: torch.Tensor   # (B,) long
    source_emotions: torch.Tensor   # (B,) long
    indices: List[int]


def pad_sequences(
    sequences: Sequence[Sequence[int]],
    device: Optional[torch.device] = None,
    min_width: int = 1,
) -> SequenceBatch:
    """Right-pad id sequences with PAD; empty sequences are allowed."""
    lengths = [len(s) for s in sequences]
    width = max([min_width] + lengths)
    ids = torch.full((len(sequences), width), Vocabulary.PAD_ID, dtype=torch.long)
    for row, seq in enumerate(sequences):
        if seq:
            ids[row, :len(seq)] = torch.as_tensor(list(seq), dtype=torch.long)
    return SequenceBatch(ids=ids.to(device) if device else ids, lengths=torch.as_tensor(lengths, dtype=torch.long))


def utterance_ids(utterance: Utterance) -> List[int]:
    if utterance.ids is None:
        raise ValueError(f"Utterance is not encoded: {utterance.text!r}")
    return list(utterance.ids)


def emotion_tensor(emotions: Sequence[EmotionCategory], device: Optional[torch.device] = None) -> torch.Tensor:
    return torch.as_tensor([int(e) for e in emotions], dtype=torch.long, device=device)


def make_pair_batch(
    pairs: Sequence[DialoguePair],
    direction: Direction,
    device: Optional[torch.device] = None,
) -> PairBatch:
    """Arrange pairs as (source, target, emotions) for the given direction."""
    if not pairs:
        raise ValueError("Cannot build a batch from zero pairs")
    return PairBatch(
        source=pad_sequences([utterance_ids(p.source(direction)) for p in pairs], device),
        target=pad_sequences([utterance_ids(p.target(direction)) for p in pairs], device),
        target_emotions=emotion_tensor([p.target_emotion(direction) for p in pairs], device),
        source_emotions=emotion_tensor([p.source_emotion(direction) for p in pairs], device),
        indices=[p.index for p in pairs],
    )
