"""Minimal differentiable-computation substrate.

Single-sequence layers ([T x D] in, [T x D']-ish out) with hand-written
backward passes, the Adam optimizer, gradient clipping, and a central
finite-difference gradient checker. Training runs in float32; gradient
checks run the same code in float64.
"""

from phrasebreak.neural.config import ModelConfig, TrainConfig, blstm_config, encoder_config
from phrasebreak.neural.gradcheck import finite_difference_check
from phrasebreak.neural.layers import (
    BiLSTM,
    Dense,
    Dropout,
    Embedding,
    LayerNorm,
    MultiHeadSelfAttention,
    Parameter,
    TransformerEncoderBlock,
    gelu,
)
from phrasebreak.neural.losses import IGNORE_INDEX, softmax, softmax_cross_entropy
from phrasebreak.neural.optim import Adam, AdamState, adam_step, clip_gradients

__all__ = [
    "Adam",
    "AdamState",
    "BiLSTM",
    "Dense",
    "Dropout",
    "Embedding",
    "IGNORE_INDEX",
    "LayerNorm",
    "ModelConfig",
    "MultiHeadSelfAttention",
    "Parameter",
    "TrainConfig",
    "TransformerEncoderBlock",
    "adam_step",
    "blstm_config",
    "clip_gradients",
    "encoder_config",
    "finite_difference_check",
    "gelu",
    "softmax",
    "softmax_cross_entropy",
]
