"""Command-line entry point.

Subcommands: prepare-data, train-blstm, pretrain-encoder, finetune-encoder,
punctuate, evaluate, abx serve, abx analyze. Defaults reproduce the standard
training recipes, every run logs its resolved configuration, and all
structured outputs are JSON/JSONL in UTF-8.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from phrasebreak import corpus as corpus_mod
from phrasebreak.corpus import (
    AlignmentFormatConfig,
    SplitSpec,
    build_dataset,
    parse_alignment,
    read_dataset_jsonl,
    split_stats,
    write_dataset_jsonl,
)
from phrasebreak.errors import PhraseBreakError
from phrasebreak.evaluation import emit_report
from phrasebreak.neural.config import TrainConfig, blstm_config, encoder_config

log = logging.getLogger("phrasebreak")


def _log_config(args: argparse.Namespace) -> None:
    resolved = {k: str(v) if isinstance(v, Path) else v
                for k, v in vars(args).items() if k != "func"}
    log.info("resolved config: %s", json.dumps(resolved, sort_keys=True, default=str))


def _write_history(history, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for record in history:
            fh.write(json.dumps(record, sort_keys=True) + "\n")


def cmd_prepare_data(args) -> int:
    alignment_dir = Path(args.alignments)
    if not alignment_dir.is_dir():
        raise FileNotFoundError(f"alignment directory {alignment_dir} does not exist")
    paths = sorted(p for p in alignment_dir.iterdir() if p.is_file())
    if not paths:
        raise FileNotFoundError(f"no alignment files in {alignment_dir}")
    config = AlignmentFormatConfig(
        silence_tokens=frozenset(args.silence_tokens.split(","))
        if args.silence_tokens else AlignmentFormatConfig().silence_tokens
    )
    utterances = []
    for path in paths:
        try:
            utterances.append(
                parse_alignment(path.read_bytes(), config, utterance_id=path.stem)
            )
        except PhraseBreakError as exc:
            raise type(exc)(f"{path}: {exc}") from exc
    if args.split_file:
        if (args.train_ratio, args.dev_ratio, args.test_ratio) != (0.8, 0.1, 0.1):
            raise ValueError("give either --split-file or ratio flags, not both")
        with open(args.split_file, encoding="utf-8") as fh:
            spec = SplitSpec(explicit=json.load(fh))
    else:
        spec = SplitSpec(
            ratios={"train": args.train_ratio, "dev": args.dev_ratio, "test": args.test_ratio},
            seed=args.seed,
        )
    splits = build_dataset(utterances, spec, min_pause=args.min_pause)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    stats = {}
    for split in splits:
        write_dataset_jsonl(split, out_dir / f"{split.name}.jsonl")
        stats[split.name] = split_stats(split)
    with open(out_dir / "stats.json", "w", encoding="utf-8") as fh:
        json.dump(stats, fh, indent=2, sort_keys=True)
        fh.write("\n")
    log.info("wrote %s", ", ".join(f"{s.name}:{len(s)}" for s in splits))
    return 0


def _load_split(data_dir, name):
    path = Path(data_dir) / f"{name}.jsonl"
    if not path.exists():
        raise FileNotFoundError(f"missing dataset split {path}")
    return read_dataset_jsonl(path, name=name)


def cmd_train_blstm(args) -> int:
    from phrasebreak.models.training import train_blstm

    train_split = _load_split(args.data, "train")
    dev_split = _load_split(args.data, "dev")
    cfg = TrainConfig(
        learning_rate=args.lr, batch_size=args.batch_size, num_epochs=args.epochs,
        grad_clip_norm=args.clip_norm, seed=args.seed,
    )
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    model_cfg = None
    if (args.embedding_dim, args.hidden_size, args.num_layers) != (300, 512, 2):
        from phrasebreak.textproc import build_vocab
        vocab = build_vocab(train_split, min_freq=args.min_freq)
        model_cfg = blstm_config(
            len(vocab), embedding_dim=args.embedding_dim,
            hidden_size=args.hidden_size, num_layers=args.num_layers,
        )
    model, history = train_blstm(
        train_split, dev_split, cfg,
        model_cfg=model_cfg, min_freq=args.min_freq, out_dir=out_dir / "checkpoint",
    )
    _write_history(history, out_dir / "metrics.jsonl")
    best = max(h["dev_f1_break"] for h in history)
    log.info("best dev break-F1: %.4f", best)
    return 0


def cmd_pretrain_encoder(args) -> int:
    from phrasebreak.models.training import pretrain_encoder_mlm
    from phrasebreak.textproc import build_subword_vocab

    train_split = _load_split(args.data, "train")
    sequences = [seq.words for seq in train_split.sequences]
    vocab = build_subword_vocab(sequences, max_words=args.vocab_max_words)
    cfg = TrainConfig(
        learning_rate=args.lr, batch_size=args.batch_size, num_epochs=args.epochs,
        grad_clip_norm=args.clip_norm, seed=args.seed,
    )
    model_cfg = encoder_config(
        len(vocab), width=args.width, num_layers=args.num_layers,
        num_heads=args.num_heads, ffn_size=args.ffn_size,
        max_len=args.max_len, dropout_p=args.dropout,
    )
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    model, history = pretrain_encoder_mlm(
        sequences, cfg, model_cfg=model_cfg, vocab=vocab,
        out_dir=out_dir / "checkpoint",
    )
    _write_history(history, out_dir / "metrics.jsonl")
    log.info("final MLM loss: %.4f", history[-1]["mlm_loss"])
    return 0


def cmd_finetune_encoder(args) -> int:
    from phrasebreak.models.training import finetune_encoder

    train_split = _load_split(args.data, "train")
    dev_split = _load_split(args.data, "dev")
    cfg = TrainConfig(
        learning_rate=args.lr, batch_size=args.batch_size, num_epochs=args.epochs,
        grad_clip_norm=args.clip_norm, seed=args.seed,
    )
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    model, history = finetune_encoder(
        train_split, dev_split, args.init, cfg, out_dir=out_dir / "checkpoint",
    )
    _write_history(history, out_dir / "metrics.jsonl")
    best = max(h["dev_f1_break"] for h in history)
    log.info("best dev break-F1: %.4f", best)
    return 0


def cmd_punctuate(args) -> int:
    from phrasebreak.textproc import insert_breaks_as_commas, NB, normalize_and_tokenize

    model = None
    if args.model:
        from phrasebreak.models.checkpoint import load_checkpoint
        model = load_checkpoint(args.model)
    with open(args.input, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    out_lines = []
    for line in lines:
        if not line.strip():
            out_lines.append("")
            continue
        if model is None:
            words = normalize_and_tokenize(line)
            out_lines.append(insert_breaks_as_commas(words, [NB] * len(words)))
        else:
            from phrasebreak.models.decode import punctuate_text
            out_lines.append(punctuate_text(model, line))
    text = "\n".join(out_lines) + "\n"
    if args.output == "-":
        sys.stdout.write(text)
    else:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    return 0


def cmd_evaluate(args) -> int:
    from phrasebreak.models.checkpoint import load_checkpoint
    from phrasebreak.models.training import evaluate_f1

    model = load_checkpoint(args.model)
    data_path = Path(args.data)
    if not data_path.exists():
        raise FileNotFoundError(f"missing dataset split {data_path}")
    split = read_dataset_jsonl(data_path, name=data_path.stem)
    metrics = evaluate_f1(model, split)
    report, table = emit_report(metrics, [], json_path=args.out)
    print(table)
    return 0


def cmd_abx_serve(args) -> int:
    from phrasebreak.abx.service import serve

    admin_secret = None
    if args.admin_secret:
        admin_secret = os.environ.get(args.admin_secret)
        if not admin_secret:
            raise ValueError(f"environment variable {args.admin_secret} is empty or unset")
    serve(
        args.manifest, args.port, args.responses,
        admin_secret=admin_secret, static_dir=args.static_dir,
        enforce_order=not args.allow_skip, host=args.host,
    )
    return 0


def cmd_abx_analyze(args) -> int:
    from phrasebreak.abx.store import export_responses

    responses_path = Path(args.responses)
    if not responses_path.exists():
        raise FileNotFoundError(f"response log {responses_path} does not exist")
    comparisons, records = export_responses(responses_path)
    report, table = emit_report(None, comparisons, json_path=args.out)
    print(table)
    log.info("analyzed %d records over %d comparisons", len(records), len(comparisons))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="phrasebreak",
        description="Phrase-break prediction toolkit: data preparation, model "
                    "training, text punctuation, and ABX listening-test analysis.",
    )
    parser.add_argument("--log-level", default="INFO",
                        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
                        help="logging verbosity")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("prepare-data", help="derive B/NB datasets from alignment files")
    p.add_argument("--alignments", required=True, help="directory of alignment files")
    p.add_argument("--out", required=True, help="output directory for JSONL splits")
    p.add_argument("--min-pause", type=float, default=corpus_mod.DEFAULT_MIN_PAUSE,
                   help="minimum pause duration in seconds counted as a break")
    p.add_argument("--train-ratio", type=float, default=0.8, help="train split ratio")
    p.add_argument("--dev-ratio", type=float, default=0.1, help="dev split ratio")
    p.add_argument("--test-ratio", type=float, default=0.1, help="test split ratio")
    p.add_argument("--split-file", default=None,
                   help="JSON file with explicit {train,dev,test} id lists")
    p.add_argument("--silence-tokens", default=None,
                   help="comma-separated silence sentinels (default: sil,sp,spn,empty)")
    p.add_argument("--seed", type=int, default=0, help="seed for hash-ratio splits")
    p.set_defaults(func=cmd_prepare_data)

    p = sub.add_parser("train-blstm", help="train the BLSTM tagger")
    p.add_argument("--data", required=True, help="directory with train.jsonl and dev.jsonl")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--batch-size", type=int, default=64, help="sequences per batch")
    p.add_argument("--lr", type=float, default=0.001, help="Adam learning rate")
    p.add_argument("--epochs", type=int, default=10, help="training epochs")
    p.add_argument("--embedding-dim", type=int, default=300, help="word embedding width")
    p.add_argument("--hidden-size", type=int, default=512, help="LSTM units per direction")
    p.add_argument("--num-layers", type=int, default=2, help="stacked BLSTM layers")
    p.add_argument("--min-freq", type=int, default=2, help="vocabulary frequency cutoff")
    p.add_argument("--clip-norm", type=float, default=None, help="global gradient-norm limit")
    p.add_argument("--seed", type=int, default=0, help="run seed")
    p.set_defaults(func=cmd_train_blstm)

    p = sub.add_parser("pretrain-encoder", help="masked-LM pre-train the encoder")
    p.add_argument("--data", required=True, help="directory with train.jsonl")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--width", type=int, default=256, help="encoder width")
    p.add_argument("--num-layers", type=int, default=4, help="encoder blocks")
    p.add_argument("--num-heads", type=int, default=4, help="attention heads")
    p.add_argument("--ffn-size", type=int, default=1024, help="feed-forward width")
    p.add_argument("--max-len", type=int, default=128, help="positional limit")
    p.add_argument("--dropout", type=float, default=0.1, help="dropout probability")
    p.add_argument("--vocab-max-words", type=int, default=4000,
                   help="whole-word pieces kept in the subword vocabulary")
    p.add_argument("--batch-size", type=int, default=64, help="chunks per batch")
    p.add_argument("--lr", type=float, default=3e-4, help="Adam learning rate")
    p.add_argument("--epochs", type=int, default=10, help="training epochs")
    p.add_argument("--clip-norm", type=float, default=None, help="global gradient-norm limit")
    p.add_argument("--seed", type=int, default=0, help="run seed")
    p.set_defaults(func=cmd_pretrain_encoder)

    p = sub.add_parser("finetune-encoder", help="fine-tune a pre-trained encoder")
    p.add_argument("--data", required=True, help="directory with train.jsonl and dev.jsonl")
    p.add_argument("--init", required=True, help="encoder checkpoint directory")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--batch-size", type=int, default=64, help="chunks per batch")
    p.add_argument("--lr", type=float, default=1e-5, help="Adam learning rate")
    p.add_argument("--epochs", type=int, default=10, help="training epochs")
    p.add_argument("--clip-norm", type=float, default=10.0, help="global gradient-norm limit")
    p.add_argument("--seed", type=int, default=0, help="run seed")
    p.set_defaults(func=cmd_finetune_encoder)

    p = sub.add_parser("punctuate", help="insert predicted breaks as commas")
    p.add_argument("--model", default=None,
                   help="checkpoint directory; omit to pass text through unpunctuated")
    p.add_argument("--input", required=True, help="UTF-8 text file, one passage per line")
    p.add_argument("--output", default="-", help="output file, - for stdout")
    p.set_defaults(func=cmd_punctuate)

    p = sub.add_parser("evaluate", help="score a model on a labeled split")
    p.add_argument("--model", required=True, help="checkpoint directory")
    p.add_argument("--data", required=True, help="JSONL dataset file")
    p.add_argument("--out", default=None, help="write the JSON report here")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("abx", help="ABX listening-test service and analysis")
    abx_sub = p.add_subparsers(dest="abx_command", required=True)

    ps = abx_sub.add_parser("serve", help="run the listening-test service")
    ps.add_argument("--manifest", required=True, help="stimulus manifest JSON")
    ps.add_argument("--port", type=int, default=8765, help="TCP port")
    ps.add_argument("--responses", required=True, help="append-only response log path")
    ps.add_argument("--admin-secret", default=None,
                    help="name of an environment variable holding the export secret")
    ps.add_argument("--static-dir", default=None, help="frontend bundle directory")
    ps.add_argument("--allow-skip", action="store_true",
                    help="let listeners answer trials out of order")
    ps.add_argument("--host", default="127.0.0.1", help="bind address")
    ps.set_defaults(func=cmd_abx_serve)

    pa = abx_sub.add_parser("analyze", help="chi-squared analysis of a response log")
    pa.add_argument("--responses", required=True, help="response log path")
    pa.add_argument("--out", default=None, help="write the JSON report here")
    pa.set_defaults(func=cmd_abx_analyze)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=getattr(logging, args.log_level),
        format="%(asctime)s %(name)s %(levelname)s %(message)s",
    )
    _log_config(args)
    try:
        return args.func(args)
    except Exception as exc:  # noqa: BLE001 - single-line CLI error contract
        message = " ".join(str(exc).split())
        print(f"error: {type(exc).__name__}: {message}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
