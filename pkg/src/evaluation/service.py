"""Evaluation service producing the automatic-metric report for a forward model."""

import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import pandas as pd

from ..corpus.vocabulary import Vocabulary
from ..models import Corpus, Direction, EmotionLexicon, EvalReport
from ..modeling.classifier import EmotionClassifier
from ..modeling.ecm import ECMModel, decode_pairs
from .metrics import bleu_n, distinct_n, embedding_scores, emotion_accuracy, emotion_word_rate
from .vectors import WordVectors

logger = logging.getLogger(__name__)


class EvaluationService:
    """Service for computing the evaluation report of a trained forward model."""

    def __init__(
        self,
        classifier: EmotionClassifier,
        lexicon: EmotionLexicon,
        vocab: Vocabulary,
        vectors: Optional[WordVectors] = None,
    ):
        self.classifier = classifier
        self.lexicon = lexicon
        self.vocab = vocab
        self.vectors = vectors

    def generate(self, model: ECMModel, corpus: Corpus, batch_size: int = 64) -> List[Dict[str, Any]]:
        """
        One greedy response per test pair, conditioned on the gold response emotion.

        Returns:
            List of {index, query, e_r, response, reference, ids} records
        """
        outputs = decode_pairs(model, corpus.pairs, Direction.FORWARD, batch_size)
        return [
            {
                "index": pair.index,
                "query": pair.query.text,
                "e_r": pair.r_emotion.label,
                "response": " ".join(self.vocab.decode(ids)),
                "reference": pair.response.text,
                "ids": ids,
            }
            for pair, ids in zip(corpus, outputs)
        ]

    def full_report(self, model: ECMModel, corpus: Corpus) -> Tuple[EvalReport, List[Dict[str, Any]]]:
        """
        Compute all metrics on a test corpus.

        Args:
            model: Forward model; it is only read
            corpus: Encoded test corpus

        Returns:
            (EvalReport, generation records)
        """
        if len(corpus) == 0:
            raise ValueError("Cannot evaluate on an empty corpus")
        logger.info(f"Evaluating on {len(corpus)} pairs")

        generations = self.generate(model, corpus)
        hypotheses = [self.vocab.decode(g["ids"]) for g in generations]
        references = [list(p.response.tokens) for p in corpus]
        queries = [list(p.query.tokens) for p in corpus]
        targets = [p.r_emotion for p in corpus]

        vectors = self.vectors or WordVectors.from_model(model, self.vocab)
        embedding = embedding_scores(hypotheses, references, queries, vectors)

        report = EvalReport(
            average=embedding["average"],
            extrema=embedding["extrema"],
            greedy=embedding["greedy"],
            coherence=embedding["coherence"],
            dist1=distinct_n(hypotheses, 1),
            dist2=distinct_n(hypotheses, 2),
            bleu1=bleu_n(hypotheses, references, 1),
            bleu2=bleu_n(hypotheses, references, 2),
            emo_acc=emotion_accuracy(self.classifier, [g["ids"] for g in generations], targets),
            emo_word=emotion_word_rate(self.lexicon, hypotheses, targets),
            n_pairs=len(corpus),
            skipped_pairs=int(embedding["skipped"]),
            vectors_source=vectors.source,
        )
        logger.info(f"Evaluation complete: {dict(report.metric_columns())}")
        return report, generations


def report_table(reports: Dict[str, EvalReport]) -> pd.DataFrame:
    """One row per system, metric columns in report order."""
    rows = []
    for name, report in reports.items():
        row = {"System": name}
        row.update({label: round(value, 4) for label, value in report.metric_columns()})
        rows.append(row)
    return pd.DataFrame(rows)


def write_report(report: EvalReport, generations: List[Dict[str, Any]], out_dir: Path, name: str = "model") -> Dict[str, Path]:
    """Write report.json, report.txt and generations.jsonl."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {
        "json": out_dir / "report.json",
        "table": out_dir / "report.txt",
        "generations": out_dir / "generations.jsonl",
    }
    paths["json"].write_text(json.dumps(report.model_dump(), indent=2), encoding="utf-8")
    paths["table"].write_text(report_table({name: report}).to_string(index=False) + "\n", encoding="utf-8")
    with paths["generations"].open("w", encoding="utf-8") as f:
        for record in generations:
            f.write(json.dumps(
                {"query": record["query"], "e_r": record["e_r"], "response": record["response"]},
                ensure_ascii=False,
            ) + "\n")
    logger.info(f"Wrote evaluation report to {out_dir}")
    return paths
