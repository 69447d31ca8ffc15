"""Emotion lexicon loading."""

import json
import logging
from pathlib import Path
from typing import Dict, List

from ..exceptions import EmotionLabelError, LexiconError
from ..models import EmotionCategory, EmotionLexicon

logger = logging.getLogger(__name__)


def load_lexicon(path: Path) -> EmotionLexicon:
    """
    Load a JSON object mapping category name to a list of tokens.

    Args:
        path: Lexicon file; an empty file yields empty sets

    Returns:
        EmotionLexicon with pairwise disjoint category sets

    Raises:
        LexiconError: a word is listed under two categories, or under Neutral
    """
    text = Path(path).read_text(encoding="utf-8").strip()
    if not text:
        logger.warning(f"Lexicon file {path} is empty")
        return EmotionLexicon()

    try:
        raw = json.loads(text)
    except json.JSONDecodeError as e:
        raise LexiconError(f"Lexicon file {path} is not valid JSON: {e}") from e
    if not isinstance(raw, dict):
        raise LexiconError(f"Lexicon file {path} must contain a JSON object")

    owner: Dict[str, EmotionCategory] = {}
    words: Dict[EmotionCategory, set] = {}
    for name, tokens in raw.items():
        try:
            category = EmotionCategory.from_name(name)
        except EmotionLabelError as e:
            raise LexiconError(str(e)) from e
        if category is EmotionCategory.NEUTRAL and tokens:
            raise LexiconError("Neutral category must not list emotion words")
        for token in tokens:
            previous = owner.get(token)
            if previous is not None and previous is not category:
                raise LexiconError(
                    f"Word {token!r} listed under both {previous.label} and {category.label}"
                )
            owner[token] = category
            words.setdefault(category, set()).add(token)

    lexicon = EmotionLexicon(words={c: frozenset(ws) for c, ws in words.items()})
    logger.info(f"Loaded lexicon {lexicon.sizes()} from {path}")
    return lexicon


def save_lexicon(lexicon: EmotionLexicon, path: Path) -> None:
    """Write the lexicon as JSON with sorted word lists."""
    payload: Dict[str, List[str]] = {
        category.label: sorted(lexicon.get(category))
        for category in EmotionCategory
        if category is not EmotionCategory.NEUTRAL
    }
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, ensure_ascii=False, indent=2, sort_keys=True), encoding="utf-8")
