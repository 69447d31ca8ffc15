"""Corpus file ingestion, encoding and splitting."""

import json
import logging
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from ..exceptions import CorpusFormatError, EmotionLabelError
from ..models import Corpus, DialoguePair, EmotionCategory, Split, Utterance
from .vocabulary import Vocabulary

logger = logging.getLogger(__name__)

MIN_LENGTH = 3
MAX_LENGTH = 30


def encode_utterance(tokens: Sequence[str], vocab: Vocabulary) -> Utterance:
    """Attach vocabulary ids to a token sequence; OOV tokens map to UNK."""
    return Utterance(tokens=tuple(tokens), ids=tuple(vocab.encode(tokens)))


def decode_utterance(ids: Sequence[int], vocab: Vocabulary) -> List[str]:
    """Map ids back to surface tokens (UNK decodes to the UNK marker)."""
    return vocab.decode(ids)


def _parse_tsv_line(line: str, line_number: int) -> Tuple[List[str], str, List[str], str]:
    fields = line.split("\t")
    if len(fields) != 4:
        raise CorpusFormatError(f"expected 4 tab-separated fields, found {len(fields)}", line_number)
    query, q_emotion, response, r_emotion = fields
    return query.split(), q_emotion, response.split(), r_emotion


def _parse_json_line(line: str, line_number: int) -> Tuple[List[str], str, List[str], str]:
    try:
        record = json.loads(line)
    except json.JSONDecodeError as e:
        raise CorpusFormatError(f"invalid JSON: {e}", line_number) from e
    if not isinstance(record, dict):
        raise CorpusFormatError("record must be a JSON object", line_number)
    missing = [k for k in ("query", "q_emotion", "response", "r_emotion") if k not in record]
    if missing:
        raise CorpusFormatError(f"missing keys {missing}", line_number)

    def tokens_of(value) -> List[str]:
        if isinstance(value, str):
            return value.split()
        if isinstance(value, list) and all(isinstance(t, str) for t in value):
            return list(value)
        raise CorpusFormatError("tokens must be a string or an array of strings", line_number)

    return tokens_of(record["query"]), record["q_emotion"], tokens_of(record["response"]), record["r_emotion"]


def _is_jsonl(path: Path) -> bool:
    return path.suffix.lower() in (".jsonl", ".json")


def load_corpus(
    path: Path,
    vocab: Optional[Vocabulary] = None,
    split: Split = Split.TRAIN,
    min_length: int = MIN_LENGTH,
    max_length: int = MAX_LENGTH,
) -> Corpus:
    """
    Load a corpus file (tab-separated records, or JSON lines for .jsonl).

    Args:
        path: Corpus file
        vocab: If given, every utterance is encoded
        split: Split tag for the returned corpus
        min_length: Minimum content length of query and response
        max_length: Maximum content length of query and response

    Returns:
        Corpus with pairs outside the length band dropped and counted
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Corpus file not found: {path}")

    parse = _parse_json_line if _is_jsonl(path) else _parse_tsv_line
    pairs: List[DialoguePair] = []
    dropped = 0

    with path.open(encoding="utf-8") as f:
        for line_number, raw in enumerate(f, 1):
            line = raw.rstrip("\r\n")
            if not line.strip():
                continue
            query, q_name, response, r_name = parse(line, line_number)
            try:
                q_emotion = EmotionCategory.from_name(q_name)
                r_emotion = EmotionCategory.from_name(r_name)
            except EmotionLabelError as e:
                raise EmotionLabelError(f"line {line_number}: {e}") from None

            if not (min_length <= len(query) <= max_length and min_length <= len(response) <= max_length):
                dropped += 1
                continue

            pairs.append(DialoguePair(
                query=encode_utterance(query, vocab) if vocab else Utterance(tokens=tuple(query)),
                response=encode_utterance(response, vocab) if vocab else Utterance(tokens=tuple(response)),
                q_emotion=q_emotion,
                r_emotion=r_emotion,
                index=len(pairs),
            ))

    if dropped:
        logger.warning(f"Dropped {dropped} pairs outside length bounds [{min_length}, {max_length}] from {path}")
    logger.info(f"Loaded {len(pairs)} pairs from {path}")
    return Corpus(pairs=tuple(pairs), split=split, dropped=dropped)


def save_corpus(corpus: Corpus, path: Path) -> None:
    """Write a corpus in the format implied by the file suffix."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = []
    for pair in corpus:
        if _is_jsonl(path):
            lines.append(json.dumps({
                "query": list(pair.query.tokens),
                "q_emotion": pair.q_emotion.label,
                "response": list(pair.response.tokens),
                "r_emotion": pair.r_emotion.label,
            }, ensure_ascii=False))
        else:
            lines.append("\t".join([
                pair.query.text, pair.q_emotion.label, pair.response.text, pair.r_emotion.label
            ]))
    path.write_text("".join(f"{line}\n" for line in lines), encoding="utf-8")
    logger.info(f"Saved {len(corpus)} pairs to {path}")


def reindex(pairs: Iterable[DialoguePair], split: Split, dropped: int = 0) -> Corpus:
    """Build a corpus from pairs, renumbering indices from 0."""
    return Corpus(
        pairs=tuple(pair.model_copy(update={"index": i}) for i, pair in enumerate(pairs)),
        split=split,
        dropped=dropped,
    )


def encode_corpus(corpus: Corpus, vocab: Vocabulary) -> Corpus:
    """Return a copy of the corpus with all utterances encoded."""
    pairs = [
        pair.model_copy(update={
            "query": encode_utterance(pair.query.tokens, vocab),
            "response": encode_utterance(pair.response.tokens, vocab),
        })
        for pair in corpus
    ]
    return Corpus(pairs=tuple(pairs), split=corpus.split, dropped=corpus.dropped)


def split_corpus(
    corpus: Corpus,
    ratios: Tuple[float, float, float] = (0.8, 0.1, 0.1),
    seed: int = 0,
) -> Tuple[Corpus, Corpus, Corpus]:
    """
    Randomly partition a corpus into train/valid/test.

    Sizes are round(r * N) for train and valid; test takes the remainder.
    """
    if len(ratios) != 3 or any(r <= 0 for r in ratios) or abs(sum(ratios) - 1.0) > 1e-6:
        raise ValueError(f"ratios must be three positive numbers summing to 1, got {ratios}")

    n = len(corpus)
    order = np.random.default_rng(seed).permutation(n)
    n_train = int(round(ratios[0] * n))
    n_valid = min(int(round(ratios[1] * n)), n - n_train)

    parts = (order[:n_train], order[n_train:n_train + n_valid], order[n_train + n_valid:])
    splits = (Split.TRAIN, Split.VALID, Split.TEST)
    result = tuple(reindex((corpus[int(i)] for i in part), split) for part, split in zip(parts, splits))
    logger.info(f"Split {n} pairs into {len(result[0])}/{len(result[1])}/{len(result[2])}")
    return result


def corpus_statistics(corpus: Corpus) -> pd.DataFrame:
    """Query/response counts per emotion category."""
    rows = []
    for category in EmotionCategory:
        rows.append({
            "Emotion": category.label,
            "Query": sum(1 for p in corpus if p.q_emotion is category),
            "Response": sum(1 for p in corpus if p.r_emotion is category),
        })
    return pd.DataFrame(rows)
