"""Token/id mapping with reserved special symbols."""

import hashlib
import logging
from collections import Counter
from pathlib import Path
from typing import Dict, Iterable, List, Sequence

from ..models import Corpus

logger = logging.getLogger(__name__)


class Vocabulary:
    """
    Frequency-ranked vocabulary.

    Ids 0-3 are reserved for PAD, BOS, EOS and UNK; regular tokens start at 4.
    """

    PAD_TOKEN = "<pad>"
    BOS_TOKEN = "<s>"
    EOS_TOKEN = "</s>"
    UNK_TOKEN = "<unk>"
    SPECIALS = (PAD_TOKEN, BOS_TOKEN, EOS_TOKEN, UNK_TOKEN)

    PAD_ID = 0
    BOS_ID = 1
    EOS_ID = 2
    UNK_ID = 3

    def __init__(self, tokens: Sequence[str]):
        """
        Args:
            tokens: Regular tokens in id order (id = position + 4)
        """
        self.idx2word: List[str] = list(self.SPECIALS)
        self.word2idx: Dict[str, int] = {tok: i for i, tok in enumerate(self.SPECIALS)}
        for token in tokens:
            if token in self.word2idx:
                raise ValueError(f"Duplicate vocabulary token: {token!r}")
            self.word2idx[token] = len(self.idx2word)
            self.idx2word.append(token)

    def __len__(self) -> int:
        return len(self.idx2word)

    def __contains__(self, token: str) -> bool:
        return token in self.word2idx and token not in self.SPECIALS

    @property
    def regular_tokens(self) -> List[str]:
        return self.idx2word[len(self.SPECIALS):]

    def id_of(self, token: str) -> int:
        return self.word2idx.get(token, self.UNK_ID)

    def token_of(self, idx: int) -> str:
        return self.idx2word[idx]

    def encode(self, tokens: Iterable[str]) -> List[int]:
        return [self.id_of(t) for t in tokens]

    def decode(self, ids: Iterable[int], strip_specials: bool = True) -> List[str]:
        """Map ids back to tokens; PAD/BOS/EOS are dropped unless strip_specials is False."""
        out = []
        for i in ids:
            i = int(i)
            if strip_specials and i in (self.PAD_ID, self.BOS_ID, self.EOS_ID):
                continue
            out.append(self.idx2word[i])
        return out

    def fingerprint(self) -> str:
        """Stable hash of the id assignment, stored in checkpoints."""
        digest = hashlib.sha256("\n".join(self.idx2word).encode("utf-8"))
        return digest.hexdigest()

    def save(self, path: Path) -> None:
        """Write one regular token per line; line number = id - 4."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text("".join(f"{tok}\n" for tok in self.regular_tokens), encoding="utf-8")
        logger.info(f"Saved vocabulary ({len(self)} entries) to {path}")

    @classmethod
    def load(cls, path: Path) -> "Vocabulary":
        lines = Path(path).read_text(encoding="utf-8").splitlines()
        return cls([line for line in lines if line])


def build_vocabulary(corpus: Corpus, max_size: int = 40_000) -> Vocabulary:
    """
    Build a vocabulary from query and response tokens.

    Tokens are ranked by frequency, ties broken lexicographically, and the
    max_size most frequent are kept (specials are extra).
    """
    if len(corpus) == 0:
        raise ValueError("Cannot build a vocabulary from an empty corpus")
    if max_size < 1:
        raise ValueError("max_size must be positive")

    counts: Counter = Counter()
    for pair in corpus:
        counts.update(pair.query.tokens)
        counts.update(pair.response.tokens)
    for special in Vocabulary.SPECIALS:
        counts.pop(special, None)

    ranked = sorted(counts.items(), key=lambda item: (-item[1], item[0]))
    kept = [token for token, _ in ranked[:max_size]]

    if len(ranked) > max_size:
        logger.info(f"Vocabulary capped at {max_size} of {len(ranked)} distinct tokens")
    return Vocabulary(kept)
