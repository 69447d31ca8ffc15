#!/usr/bin/env python3
"""Command-line entry point: data generation, pretraining, CDL training, evaluation, ranking and chat."""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

from ..config import RunConfig, load_run_config, settings
from ..corpus import (
    CorpusValidator,
    Vocabulary,
    corpus_statistics,
    generate_synthetic_corpus,
    load_corpus,
    load_lexicon,
    save_corpus,
    save_lexicon,
    split_corpus,
)
from ..exceptions import CDLError, ConfigError
from ..models import Ablation, Corpus, Direction, EmotionLexicon, Split
from ..modeling.classifier import (
    EmotionClassifier,
    accuracy,
    category_accuracy,
    load_classifier,
    save_classifier,
)
from ..modeling.ecm import ECMModel, load_model, save_model
from ..storage import LocalCheckpointStore
from ..curriculum import export_ranking_csv, rank_by_difficulty
from ..evaluation import EvaluationService, WordVectors, write_report
from ..training import TrainingLog, model_config_for, pretrain, run_training
from .chat import chat_loop

logger = logging.getLogger(__name__)

SPLIT_FILES = {Split.TRAIN: "train.tsv", Split.VALID: "valid.tsv", Split.TEST: "test.tsv"}
LEXICON_FILE = "lexicon.json"
VOCAB_FILE = "vocab.txt"


def configure_logging() -> None:
    logging.basicConfig(
        level=getattr(logging, settings.LOG_LEVEL, logging.INFO),
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
    )


def _parse_value(raw: str) -> Any:
    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        return raw


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """Flags > config file > defaults."""
    overrides: Dict[str, Any] = {}
    for item in getattr(args, "set", None) or []:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}", [item])
        key, raw = item.split("=", 1)
        overrides[key.strip()] = _parse_value(raw)
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    if getattr(args, "ablation", None) is not None:
        overrides["ablation"] = args.ablation
    return load_run_config(Path(args.config) if args.config else None, overrides)


def _data_dir(args: argparse.Namespace, config: RunConfig) -> Path:
    return Path(args.data) if getattr(args, "data", None) else config.paths.data_dir


def _out_dir(args: argparse.Namespace, config: RunConfig) -> Path:
    return Path(args.out) if getattr(args, "out", None) else config.paths.output_dir


def load_dataset(data_dir: Path) -> Tuple[Vocabulary, EmotionLexicon, Dict[Split, Corpus]]:
    """Vocabulary, lexicon and the three encoded splits of a data directory."""
    vocab_path = data_dir / VOCAB_FILE
    if not vocab_path.exists():
        raise ConfigError(f"Vocabulary not found: expected {vocab_path}", [str(vocab_path)])
    vocab = Vocabulary.load(vocab_path)
    lexicon = load_lexicon(data_dir / LEXICON_FILE)
    splits = {}
    for split, name in SPLIT_FILES.items():
        path = data_dir / name
        if not path.exists():
            raise ConfigError(f"Corpus split not found: expected {path}", [str(path)])
        splits[split] = load_corpus(path, vocab, split)
    return vocab, lexicon, splits


def _write_meta(out_dir: Path, config: RunConfig, extra: Optional[Dict[str, Any]] = None) -> None:
    meta = config.to_meta()
    meta.update(extra or {})
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True), encoding="utf-8")


def _device(model):
    return model.to(settings.DEVICE)


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_gen_data(args: argparse.Namespace) -> int:
    config = resolve_config(args)
    out_dir = Path(args.out) if args.out else config.paths.data_dir
    corpus, lexicon, vocab = generate_synthetic_corpus(args.n, args.vocab_size, config.seed)
    train, valid, test = split_corpus(corpus, seed=config.seed)

    out_dir.mkdir(parents=True, exist_ok=True)
    for split_corpus_, split in ((train, Split.TRAIN), (valid, Split.VALID), (test, Split.TEST)):
        save_corpus(split_corpus_, out_dir / SPLIT_FILES[split])
    save_lexicon(lexicon, out_dir / LEXICON_FILE)
    vocab.save(out_dir / VOCAB_FILE)
    _write_meta(out_dir, config, {"phase": "gen-data", "n": args.n, "vocab_size": args.vocab_size,
                                  "vocab_hash": vocab.fingerprint()})

    stats = corpus_statistics(train)
    stats.to_csv(out_dir / "stats.csv", index=False)
    logger.info(f"Training corpus statistics:\n{stats.to_string(index=False)}")

    validation = CorpusValidator().validate(corpus, vocab, lexicon)
    (out_dir / "validation.json").write_text(json.dumps(validation, indent=2), encoding="utf-8")
    if not validation["is_valid"]:
        logger.error(f"Generated corpus failed validation: {validation['issues']}")
        return 1
    for warning in validation["warnings"]:
        logger.warning(warning)
    logger.info(f"Wrote {len(corpus)} pairs, lexicon {lexicon.sizes()} and vocabulary of {len(vocab)} to {out_dir}")
    return 0


def cmd_pretrain(args: argparse.Namespace) -> int:
    config = resolve_config(args)
    vocab, lexicon, splits = load_dataset(_data_dir(args, config))
    out_dir = _out_dir(args, config)
    _write_meta(out_dir, config, {"vocab_hash": vocab.fingerprint(), "phase": "pretrain"})

    with TrainingLog(out_dir / "pretrain_log.jsonl") as log:
        result = pretrain(splits[Split.TRAIN], vocab, lexicon, config, valid=splits[Split.VALID], log=log)

    store = LocalCheckpointStore(out_dir)
    save_model(result.forward, store, "pretrain/forward", vocab.fingerprint(), Direction.FORWARD)
    save_model(result.backward, store, "pretrain/backward", vocab.fingerprint(), Direction.BACKWARD)
    save_classifier(result.classifier, store, "classifier", vocab.fingerprint())
    logger.info(f"Classifier test accuracy: {accuracy(result.classifier, splits[Split.TEST]):.4f}")
    return 0


def _load_models(
    checkpoint_dir: Path,
    vocab: Vocabulary,
    config: RunConfig,
    prefix: str,
) -> Tuple[ECMModel, ECMModel, EmotionClassifier]:
    store = LocalCheckpointStore(checkpoint_dir)
    model_config = model_config_for(config, vocab)
    forward, _ = load_model(store, f"{prefix}/forward", vocab.fingerprint(), model_config)
    backward, _ = load_model(store, f"{prefix}/backward", vocab.fingerprint(), model_config)
    classifier = load_classifier(store, "classifier", vocab.fingerprint())
    return _device(forward), _device(backward), _device(classifier)


def cmd_train_cdl(args: argparse.Namespace) -> int:
    config = resolve_config(args)
    vocab, lexicon, splits = load_dataset(_data_dir(args, config))
    checkpoint_dir = Path(args.checkpoint) if args.checkpoint else config.paths.output_dir
    forward, backward, classifier = _load_models(checkpoint_dir, vocab, config, "pretrain")

    out_dir = _out_dir(args, config)
    if out_dir.resolve() != checkpoint_dir.resolve():
        save_classifier(classifier, LocalCheckpointStore(out_dir), "classifier", vocab.fingerprint())

    result = run_training(
        splits[Split.TRAIN], splits[Split.VALID], vocab, lexicon, config,
        forward, backward, classifier, out_dir,
        resume_from=Path(args.resume) if args.resume else None,
    )
    logger.info(f"Best validation Emotion-acc {result.best_score:.4f} after {result.steps} steps")
    return 0


def cmd_evaluate(args: argparse.Namespace) -> int:
    config = resolve_config(args)
    vocab, lexicon, splits = load_dataset(_data_dir(args, config))
    checkpoint_dir = Path(args.checkpoint) if args.checkpoint else config.paths.output_dir
    store = LocalCheckpointStore(checkpoint_dir)
    model, _ = load_model(store, args.model, vocab.fingerprint(), model_config_for(config, vocab))
    classifier = load_classifier(store, "classifier", vocab.fingerprint())
    out_dir = _out_dir(args, config)
    _write_meta(out_dir, config, {"vocab_hash": vocab.fingerprint(), "phase": "evaluate",
                                  "checkpoint": str(checkpoint_dir), "model": args.model})

    vectors = WordVectors.from_text_file(config.paths.vectors_path) if config.paths.vectors_path else None
    service = EvaluationService(_device(classifier), lexicon, vocab, vectors)
    report, generations = service.full_report(_device(model), splits[Split.TEST])
    write_report(report, generations, out_dir, name=args.model)
    return 0


def cmd_rank_curriculum(args: argparse.Namespace) -> int:
    config = resolve_config(args)
    vocab, lexicon, splits = load_dataset(_data_dir(args, config))
    checkpoint_dir = Path(args.checkpoint) if args.checkpoint else config.paths.output_dir
    classifier = _device(load_classifier(LocalCheckpointStore(checkpoint_dir), "classifier", vocab.fingerprint()))

    out_dir = _out_dir(args, config)
    train = splits[Split.TRAIN]
    _write_meta(out_dir, config, {"vocab_hash": vocab.fingerprint(), "phase": "rank-curriculum",
                                  "checkpoint": str(checkpoint_dir)})
    for direction in Direction:
        ranked = rank_by_difficulty(train, classifier, direction)
        export_ranking_csv(ranked, out_dir / f"ranking_{direction.value}.csv", train)

    test = splits[Split.TEST]
    logger.info(f"Lex. size {lexicon.sizes()}")
    logger.info(f"ACC(f) {category_accuracy(classifier, test, Direction.FORWARD)}")
    logger.info(f"ACC(b) {category_accuracy(classifier, test, Direction.BACKWARD)}")
    return 0


def cmd_chat(args: argparse.Namespace) -> int:
    config = resolve_config(args)
    data_dir = _data_dir(args, config)
    vocab = Vocabulary.load(data_dir / VOCAB_FILE)
    checkpoint_dir = Path(args.checkpoint) if args.checkpoint else config.paths.output_dir
    store = LocalCheckpointStore(checkpoint_dir)
    model, _ = load_model(store, args.model, vocab.fingerprint(), model_config_for(config, vocab))
    classifier = load_classifier(store, "classifier", vocab.fingerprint())
    out_dir = Path(args.out) if args.out else checkpoint_dir / "chat"
    _write_meta(out_dir, config, {"vocab_hash": vocab.fingerprint(), "phase": "chat",
                                  "checkpoint": str(checkpoint_dir), "model": args.model, "emotion": args.emotion})
    chat_loop(_device(model), _device(classifier), vocab, args.emotion)
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def _common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=str, help="JSON run configuration")
    parser.add_argument("--seed", type=int, help="Run seed (overrides the config file)")
    parser.add_argument("--set", action="append", metavar="KEY=VALUE",
                        help="Override a config value by dotted key, e.g. trainer.batch_size=8")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cdl",
        description="Curriculum dual learning for emotion-controllable response generation",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen-data", help="Generate a synthetic emotion-tagged corpus")
    _common(gen)
    gen.add_argument("--n", type=int, default=600, help="Number of pairs")
    gen.add_argument("--vocab-size", type=int, default=200, help="Number of distinct surface tokens")
    gen.add_argument("--out", type=str, help="Output data directory")
    gen.set_defaults(func=cmd_gen_data)

    pre = sub.add_parser("pretrain", help="Pretrain both directions and the emotion classifier")
    _common(pre)
    pre.add_argument("--data", type=str, help="Data directory")
    pre.add_argument("--out", type=str, help="Run directory")
    pre.set_defaults(func=cmd_pretrain)

    cdl = sub.add_parser("train-cdl", help="Curriculum dual learning from pretrained checkpoints")
    _common(cdl)
    cdl.add_argument("--data", type=str, help="Data directory")
    cdl.add_argument("--checkpoint", type=str, help="Pretraining run directory")
    cdl.add_argument("--out", type=str, help="Run directory")
    cdl.add_argument("--ablation", choices=[a.value for a in Ablation], help="Training variant")
    cdl.add_argument("--resume", type=str, help="Run directory whose last/ state is resumed")
    cdl.set_defaults(func=cmd_train_cdl)

    ev = sub.add_parser("evaluate", help="Automatic evaluation on the test split")
    _common(ev)
    ev.add_argument("--data", type=str, help="Data directory")
    ev.add_argument("--checkpoint", type=str, help="Run directory holding the model and classifier")
    ev.add_argument("--model", type=str, default="best/forward", help="Forward checkpoint name")
    ev.add_argument("--out", type=str, help="Report directory")
    ev.set_defaults(func=cmd_evaluate)

    rank = sub.add_parser("rank-curriculum", help="Export the difficulty rankings")
    _common(rank)
    rank.add_argument("--data", type=str, help="Data directory")
    rank.add_argument("--checkpoint", type=str, help="Run directory holding the classifier")
    rank.add_argument("--out", type=str, help="Output directory")
    rank.set_defaults(func=cmd_rank_curriculum)

    chat = sub.add_parser("chat", help="Interactive emotional chat")
    _common(chat)
    chat.add_argument("--data", type=str, help="Data directory (for the vocabulary)")
    chat.add_argument("--checkpoint", type=str, help="Run directory holding the model and classifier")
    chat.add_argument("--model", type=str, default="best/forward", help="Forward checkpoint name")
    chat.add_argument("--emotion", type=str, default="all", help="Emotion name or 'all'")
    chat.add_argument("--out", type=str, help="Directory for meta.json (default: <checkpoint>/chat)")
    chat.set_defaults(func=cmd_chat)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Main CLI entry point."""
    configure_logging()
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (CDLError, FileNotFoundError) as e:
        logger.error(f"{args.command} failed: {e}", exc_info=True)
        return 1


if __name__ == "__main__":
    sys.exit(main())
