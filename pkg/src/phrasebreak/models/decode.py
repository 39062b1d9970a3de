"""Greedy inference: per-boundary argmax, then comma insertion."""

from __future__ import annotations

from phrasebreak.corpus import LabeledSequence
from phrasebreak.errors import EmptyInputError
from phrasebreak.models.blstm import BlstmPhrasingModel
from phrasebreak.models.encoder import EncoderPhrasingModel
from phrasebreak.textproc import (
    B,
    NB,
    align_labels_to_subwords,
    insert_breaks_as_commas,
    strip_punctuation,
)


def _argmax_labels(logits) -> list[str]:
    # Label order is [NB, B]; ties resolve to NB, the safer under-prediction.
    return [B if row[1] > row[0] else NB for row in logits]


def greedy_decode(model, words: list[str]) -> list[str]:
    """Predict one B/NB label per word by independent argmax.

    For the encoder variant the prediction is read at each word's last
    subword piece; inputs longer than the positional limit are decoded in
    word-boundary chunks and concatenated. Deterministic and side-effect
    free: parameters are never touched.
    """
    if not words:
        raise EmptyInputError("cannot decode an empty word sequence")
    model.set_training(False)
    if isinstance(model, BlstmPhrasingModel):
        logits = model.forward(model.vocab.encode(words))
        return _argmax_labels(logits)
    if isinstance(model, EncoderPhrasingModel):
        chunks = align_labels_to_subwords(
            LabeledSequence(words=list(words), labels=[NB] * len(words)),
            model.subword_vocab,
            model.config.max_len,
        )
        labels: list[str] = []
        for chunk in chunks:
            logits = model.forward(chunk.piece_ids)
            boundary_logits = [
                row for row, is_boundary in zip(logits, chunk.word_boundary_mask) if is_boundary
            ]
            labels.extend(_argmax_labels(boundary_logits))
        if len(labels) != len(words):
            raise RuntimeError(
                f"decoded {len(labels)} labels for {len(words)} words; chunking is broken"
            )
        return labels
    raise TypeError(f"cannot decode with {type(model).__name__}")


def punctuate_text(model, raw: str) -> str:
    """Punctuate raw text with the model's predicted breaks as commas."""
    if not raw or not raw.strip():
        raise EmptyInputError("no text to punctuate")
    words, _ = strip_punctuation(raw)
    labels = greedy_decode(model, words)
    return insert_breaks_as_commas(words, labels)
