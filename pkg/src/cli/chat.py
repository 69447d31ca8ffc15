"""Terminal chat: one query in, responses for one or all six emotions out."""

import logging
from typing import Callable, List, Optional, Tuple

from ..corpus.loader import encode_utterance
from ..corpus.vocabulary import Vocabulary
from ..models import EMOTIONS, EmotionCategory
from ..modeling.classifier import EmotionClassifier, predict_emotion
from ..modeling.ecm import ECMModel, generate_greedy

logger = logging.getLogger(__name__)

QUIT_WORDS = {"quit", "exit", ":q"}


def parse_emotion_choice(choice: Optional[str]) -> List[EmotionCategory]:
    """'all' (or nothing) means every category."""
    if choice is None or choice.strip().lower() == "all":
        return list(EMOTIONS)
    return [EmotionCategory.from_name(choice)]


def respond(
    text: str,
    model: ECMModel,
    classifier: EmotionClassifier,
    vocab: Vocabulary,
    emotions: List[EmotionCategory],
) -> Tuple[Optional[EmotionCategory], List[Tuple[EmotionCategory, str]]]:
    """
    Predict the query emotion and generate one greedy response per requested emotion.

    Returns:
        (predicted query emotion or None for an empty query, [(emotion, response text)])
    """
    query = encode_utterance(text.split(), vocab)
    if len(query) == 0:
        return None, []
    query_emotion = predict_emotion(classifier, query)
    responses = []
    for emotion in emotions:
        ids, _ = generate_greedy(model, query, emotion)
        responses.append((emotion, " ".join(vocab.decode(ids))))
    return query_emotion, responses


def chat_loop(
    model: ECMModel,
    classifier: EmotionClassifier,
    vocab: Vocabulary,
    emotion_choice: Optional[str] = "all",
    read: Callable[[str], str] = input,
    write: Callable[[str], None] = print,
) -> None:
    """Read queries until EOF or a quit word."""
    emotions = parse_emotion_choice(emotion_choice)
    model.eval()
    write("Type a query (or 'quit').")
    while True:
        try:
            text = read("> ")
        except EOFError:
            break
        if text.strip().lower() in QUIT_WORDS:
            break
        query_emotion, responses = respond(text, model, classifier, vocab, emotions)
        if query_emotion is None:
            continue
        write(f"[query emotion: {query_emotion.label}]")
        for emotion, response in responses:
            write(f"{emotion.label}: {response}")
