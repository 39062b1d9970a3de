"""Training loops: BLSTM supervised training, encoder MLM pre-training, fine-tuning.

Batches are length-bucketed and padded; padding positions carry the IGNORE
target so they are masked out of the loss, and each sequence is computed at
its true length. The loss is the mean cross-entropy over the batch's
non-ignored tokens. Everything is driven by one seeded generator, so a fixed
seed reproduces the loss curve bit for bit.
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from phrasebreak.corpus import DatasetSplit, LabeledSequence
from phrasebreak.errors import CheckpointError, EmptyInputError, TrainingDivergedError
from phrasebreak.evaluation import ScoreReport, score_predictions
from phrasebreak.models.blstm import BlstmPhrasingModel
from phrasebreak.models.checkpoint import (
    load_tensor_archive,
    read_checkpoint_config,
    save_checkpoint,
)
from phrasebreak.models.decode import greedy_decode
from phrasebreak.models.encoder import EncoderMlmModel, EncoderPhrasingModel
from phrasebreak.neural.config import ModelConfig, TrainConfig, blstm_config, encoder_config
from phrasebreak.neural.losses import IGNORE_INDEX, softmax_cross_entropy
from phrasebreak.neural.optim import Adam, clip_gradients
from phrasebreak.textproc import (
    LABEL_TO_ID,
    NB,
    SubwordVocabulary,
    Vocabulary,
    align_labels_to_subwords,
    build_subword_vocab,
    build_vocab,
)


class _PaddedBatch:
    """Sequences padded to a common length; lengths recover the real tokens."""

    def __init__(self, ids_rows, target_rows, pad_id):
        self.lengths = [len(row) for row in ids_rows]
        width = max(self.lengths)
        self.ids = np.full((len(ids_rows), width), pad_id, dtype=np.int64)
        self.targets = np.full((len(ids_rows), width), IGNORE_INDEX, dtype=np.int64)
        for i, (ids, targets) in enumerate(zip(ids_rows, target_rows)):
            self.ids[i, : len(ids)] = ids
            self.targets[i, : len(targets)] = targets

    @property
    def scored_tokens(self) -> int:
        return int((self.targets != IGNORE_INDEX).sum())


def _length_bucketed_batches(items, batch_size, rng):
    """Group same-scale lengths together, then shuffle the batch order."""
    order = sorted(range(len(items)), key=lambda i: (len(items[i][0]), i))
    batches = [order[i:i + batch_size] for i in range(0, len(order), batch_size)]
    rng.shuffle(batches)
    return [[items[i] for i in batch] for batch in batches]


def _train_batch(model, batch: _PaddedBatch, optimizer, grad_clip_norm,
                 epoch, step) -> tuple[float, int]:
    """One optimization step over a padded batch; returns (loss_sum, tokens)."""
    total = batch.scored_tokens
    if total == 0:
        return 0.0, 0
    optimizer.zero_grad()
    loss_sum = 0.0
    for ids, targets, length in zip(batch.ids, batch.targets, batch.lengths):
        logits = model.forward(ids[:length])
        seq_loss, dlogits = softmax_cross_entropy(logits, targets[:length], reduction="sum")
        loss_sum += seq_loss
        model.backward(dlogits / total)
    if not math.isfinite(loss_sum):
        raise TrainingDivergedError(epoch, step)
    if grad_clip_norm is not None:
        clip_gradients(model.parameters(), grad_clip_norm)
    optimizer.step()
    return loss_sum, total


def evaluate_f1(model, split: DatasetSplit) -> ScoreReport:
    """Decode every sequence of a split and score against its labels."""
    hyps = [
        LabeledSequence(words=seq.words, labels=greedy_decode(model, seq.words), id=seq.id)
        for seq in split.sequences
    ]
    return score_predictions(split.sequences, hyps)


def _snapshot(model) -> dict[str, np.ndarray]:
    return {name: value.copy() for name, value in model.named_tensors().items()}


def _restore(model, snapshot) -> None:
    for param in model.parameters():
        param.value[...] = snapshot[param.name]


def train_blstm(train_split: DatasetSplit, dev_split: DatasetSplit, cfg: TrainConfig,
                model_cfg: ModelConfig | None = None, min_freq: int = 2,
                out_dir=None):
    """Train the BLSTM tagger; keeps the epoch with the best dev break-F1.

    Returns (model, history) where history holds one record per epoch with
    the mean train loss and dev F1. When out_dir is given the best model is
    saved there as a checkpoint.
    """
    if not train_split.sequences:
        raise EmptyInputError("training split is empty")
    if not dev_split.sequences:
        raise EmptyInputError("dev split is empty; per-epoch selection needs one")
    rng = np.random.default_rng(cfg.seed)
    vocab = build_vocab(train_split, min_freq=min_freq)
    if model_cfg is None:
        model_cfg = blstm_config(len(vocab))
    model = BlstmPhrasingModel(model_cfg, vocab, rng)
    items = [
        (vocab.encode(seq.words), [LABEL_TO_ID[label] for label in seq.labels])
        for seq in train_split.sequences
    ]
    history, best = _fit_classifier(model, items, dev_split, cfg, rng, pad_id=Vocabulary.PAD)
    _restore(model, best)
    model.set_training(False)
    if out_dir is not None:
        save_checkpoint(model, out_dir)
    return model, history


def _fit_classifier(model, items, dev_split, cfg, rng, pad_id):
    optimizer = Adam(model.parameters(), lr=cfg.learning_rate)
    history = []
    best_f1 = -1.0
    best = _snapshot(model)
    for epoch in range(cfg.num_epochs):
        model.set_training(True)
        epoch_loss = 0.0
        epoch_tokens = 0
        for step, batch_items in enumerate(_length_bucketed_batches(items, cfg.batch_size, rng)):
            batch = _PaddedBatch([i for i, _ in batch_items], [t for _, t in batch_items], pad_id)
            loss_sum, tokens = _train_batch(
                model, batch, optimizer, cfg.grad_clip_norm, epoch, step
            )
            epoch_loss += loss_sum
            epoch_tokens += tokens
        model.set_training(False)
        dev_f1 = evaluate_f1(model, dev_split).f1_break
        history.append({
            "epoch": epoch,
            "train_loss": float(epoch_loss) / max(epoch_tokens, 1),
            "dev_f1_break": float(dev_f1),
        })
        if dev_f1 > best_f1:
            best_f1 = dev_f1
            best = _snapshot(model)
    return history, best


def _sequences_to_chunks(split: DatasetSplit, vocab: SubwordVocabulary, max_len: int):
    items = []
    for seq in split.sequences:
        for chunk in align_labels_to_subwords(seq, vocab, max_len):
            targets = [
                LABEL_TO_ID[label] if label in LABEL_TO_ID else IGNORE_INDEX
                for label in chunk.labels_on_pieces
            ]
            items.append((chunk.piece_ids, targets))
    return items


def mlm_mask(piece_ids, vocab: SubwordVocabulary, rng, select_p: float = 0.15,
             replacement_ids=None):
    """Apply the masked-LM corruption policy to one chunk of piece ids.

    Each non-special position is selected with probability select_p; selected
    positions become [MASK] 80% of the time, a random non-special piece 10%,
    and stay unchanged 10%. Returns (corrupted ids, targets) where targets
    hold the original id at selected positions and IGNORE_INDEX elsewhere.
    """
    never_masked = {vocab.cls_id, vocab.sep_id, vocab.pad_id}
    if replacement_ids is None:
        special = vocab.special_ids()
        replacement_ids = [i for i in range(len(vocab)) if i not in special]
    ids = np.asarray(piece_ids, dtype=np.int64).copy()
    targets = np.full(len(ids), IGNORE_INDEX, dtype=np.int64)
    for pos, piece in enumerate(piece_ids):
        if piece in never_masked:
            continue
        if rng.random() >= select_p:
            continue
        targets[pos] = piece
        roll = rng.random()
        if roll < 0.8:
            ids[pos] = vocab.mask_id
        elif roll < 0.9:
            ids[pos] = replacement_ids[rng.integers(len(replacement_ids))]
    return ids, targets


def pretrain_encoder_mlm(word_sequences, cfg: TrainConfig,
                         model_cfg: ModelConfig | None = None,
                         vocab: SubwordVocabulary | None = None,
                         out_dir=None):
    """Masked-LM pre-training of the encoder body on raw word sequences.

    Corruption follows mlm_mask and is re-sampled every epoch; loss lands
    only on the selected positions, and a chunk with none selected
    contributes nothing. Returns (model, history).
    """
    word_sequences = list(word_sequences)
    if not word_sequences:
        raise EmptyInputError("pre-training corpus is empty")
    rng = np.random.default_rng(cfg.seed)
    if vocab is None:
        vocab = build_subword_vocab(word_sequences)
    if "[MASK]" not in vocab.piece_to_id:
        raise ValueError("subword vocabulary has no [MASK] piece")
    if model_cfg is None:
        model_cfg = encoder_config(len(vocab))
    model = EncoderMlmModel(model_cfg, vocab, rng)

    base_chunks = []
    for words in word_sequences:
        seq = LabeledSequence(words=list(words), labels=[NB] * len(words))
        for chunk in align_labels_to_subwords(seq, vocab, model_cfg.max_len):
            base_chunks.append(chunk.piece_ids)

    special = vocab.special_ids()
    replacement_ids = [i for i in range(len(vocab)) if i not in special]
    optimizer = Adam(model.parameters(), lr=cfg.learning_rate)
    history = []
    for epoch in range(cfg.num_epochs):
        model.set_training(True)
        masked = []
        for piece_ids in base_chunks:
            ids, targets = mlm_mask(piece_ids, vocab, rng, replacement_ids=replacement_ids)
            if (targets != IGNORE_INDEX).any():
                masked.append((list(ids), list(targets)))
        epoch_loss = 0.0
        epoch_tokens = 0
        for step, batch_items in enumerate(_length_bucketed_batches(masked, cfg.batch_size, rng)):
            batch = _PaddedBatch(
                [i for i, _ in batch_items], [t for _, t in batch_items], vocab.pad_id
            )
            loss_sum, tokens = _train_batch(
                model, batch, optimizer, cfg.grad_clip_norm, epoch, step
            )
            epoch_loss += loss_sum
            epoch_tokens += tokens
        history.append({"epoch": epoch, "mlm_loss": float(epoch_loss) / max(epoch_tokens, 1)})
    model.set_training(False)
    if out_dir is not None:
        save_checkpoint(model, out_dir)
    return model, history


def _load_encoder_body(init) -> tuple[ModelConfig, SubwordVocabulary, dict]:
    """Read config, vocabulary, and body tensors from an encoder checkpoint."""
    if isinstance(init, (EncoderMlmModel, EncoderPhrasingModel)):
        config = init.config
        vocab = init.vocab
        tensors = {p.name: p.value.copy() for p in init.body.parameters()}
        return config, vocab, tensors
    directory = Path(init)
    config_doc = read_checkpoint_config(directory)
    if config_doc.get("kind") not in ("encoder_mlm", "encoder_classifier"):
        raise CheckpointError(
            f"{directory}: fine-tuning needs an encoder checkpoint, got kind {config_doc.get('kind')!r}"
        )
    config = ModelConfig.from_dict(config_doc["model"])
    vocab = SubwordVocabulary.load(directory / "vocab.txt")
    tensors = load_tensor_archive(directory / "tensors.bin")
    body_tensors = {k: v for k, v in tensors.items() if k.startswith("body.")}
    return config, vocab, body_tensors


def finetune_encoder(train_split: DatasetSplit, dev_split: DatasetSplit, init,
                     cfg: TrainConfig, model_cfg: ModelConfig | None = None,
                     out_dir=None):
    """Fine-tune a pre-trained encoder for break prediction.

    The classification head is freshly initialized; every body parameter is
    loaded from `init` (a checkpoint directory or encoder model) and then
    updated. Gradients are clipped at cfg.grad_clip_norm each step when set.
    """
    if not train_split.sequences:
        raise EmptyInputError("training split is empty")
    if not dev_split.sequences:
        raise EmptyInputError("dev split is empty; per-epoch selection needs one")
    ckpt_config, vocab, body_tensors = _load_encoder_body(init)
    if model_cfg is None:
        model_cfg = ckpt_config
    rng = np.random.default_rng(cfg.seed)
    model = EncoderPhrasingModel(model_cfg, vocab, rng)
    body_params = {p.name: p for p in model.body.parameters()}
    problems = []
    missing = sorted(set(body_params) - set(body_tensors))
    if missing:
        problems.append(f"missing body tensors: {missing}")
    for name in sorted(set(body_params) & set(body_tensors)):
        want = body_params[name].value.shape
        have = body_tensors[name].shape
        if want != have:
            problems.append(
                f"shape mismatch for {name}: checkpoint {list(have)} vs model {list(want)}"
            )
    if problems:
        raise CheckpointError("; ".join(problems))
    for name, param in body_params.items():
        param.value[...] = body_tensors[name].astype(param.value.dtype)

    items = _sequences_to_chunks(train_split, vocab, model_cfg.max_len)
    history, best = _fit_classifier(model, items, dev_split, cfg, rng, pad_id=vocab.pad_id)
    _restore(model, best)
    model.set_training(False)
    if out_dir is not None:
        save_checkpoint(model, out_dir)
    return model, history
