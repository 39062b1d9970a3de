"""Softmax and masked cross-entropy."""

from __future__ import annotations

import numpy as np

# Target value marking positions excluded from the loss (padding, non-final
# subword pieces, [CLS]/[SEP]).
IGNORE_INDEX = -1


def softmax(logits):
    """Row-wise softmax, stabilized by max subtraction."""
    shifted = logits - logits.max(axis=-1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=-1, keepdims=True)


def softmax_cross_entropy(logits, targets, reduction="mean"):
    """Cross-entropy over non-ignored positions.

    logits: [T x C]; targets: length-T ints where IGNORE_INDEX marks positions
    excluded from the loss. Returns (loss, dlogits); the gradient is zero at
    ignored positions. With reduction="sum" the caller owns the 1/N scaling,
    which is how batch-level token averaging is assembled.
    """
    targets = np.asarray(targets, dtype=np.int64)
    if logits.ndim != 2 or logits.shape[0] != targets.shape[0]:
        raise ValueError(f"logits {logits.shape} do not match {targets.shape[0]} targets")
    C = logits.shape[1]
    if C < 2:
        raise ValueError("need at least two classes")
    scored = targets != IGNORE_INDEX
    n_scored = int(scored.sum())
    if n_scored == 0:
        raise ValueError("all positions are ignored; loss is undefined")
    if targets[scored].min() < 0 or targets[scored].max() >= C:
        raise ValueError("target class out of range")

    shifted = logits - logits.max(axis=-1, keepdims=True)
    logsumexp = np.log(np.exp(shifted).sum(axis=-1, keepdims=True))
    log_probs = shifted - logsumexp

    rows = np.nonzero(scored)[0]
    loss_sum = -log_probs[rows, targets[rows]].sum()

    dlogits = np.zeros_like(logits)
    dlogits[rows] = np.exp(log_probs[rows])
    dlogits[rows, targets[rows]] -= 1.0

    if reduction == "mean":
        return loss_sum / n_scored, dlogits / n_scored
    if reduction == "sum":
        return loss_sum, dlogits
    raise ValueError(f"unknown reduction {reduction!r}")
