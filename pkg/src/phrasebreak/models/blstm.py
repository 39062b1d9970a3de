"""BLSTM token classifier with task-specific embeddings trained from scratch."""

from __future__ import annotations

import numpy as np

from phrasebreak.neural.config import ModelConfig
from phrasebreak.neural.layers import BiLSTM, Dense, Dropout, Embedding
from phrasebreak.neural.param import check_unique_names


class BlstmPhrasingModel:
    """Word embeddings -> stacked BLSTM layers -> dense binary classifier.

    Layer k consumes layer k-1's [T x 2H] output; the classifier maps the
    final [T x 2H] states to per-word break logits in label order [NB, B].
    """

    kind = "blstm"

    def __init__(self, config: ModelConfig, vocab, rng=None, dtype=np.float32):
        if config.variant != "blstm":
            raise ValueError(f"expected a blstm config, got {config.variant!r}")
        if len(vocab) != config.vocab_size:
            raise ValueError(
                f"vocabulary has {len(vocab)} entries but config says {config.vocab_size}"
            )
        rng = rng if rng is not None else np.random.default_rng(0)
        self.config = config
        self.vocab = vocab
        self.embedding = Embedding(
            config.vocab_size, config.embedding_dim, rng, "embedding", dtype, init="uniform"
        )
        self.layers = []
        self.dropouts = []
        in_dim = config.embedding_dim
        for k in range(config.num_layers):
            self.layers.append(BiLSTM(in_dim, config.hidden_size, rng, f"blstm.{k}", dtype))
            in_dim = 2 * config.hidden_size
            if k < config.num_layers - 1:
                self.dropouts.append(Dropout(config.dropout_p, rng))
        self.classifier = Dense(in_dim, config.num_labels, rng, "classifier", dtype)
        check_unique_names(self.parameters())

    def parameters(self):
        params = self.embedding.parameters()
        for layer in self.layers:
            params += layer.parameters()
        return params + self.classifier.parameters()

    def set_training(self, training: bool) -> None:
        for drop in self.dropouts:
            drop.set_training(training)

    def forward(self, ids) -> np.ndarray:
        x = self.embedding.forward(ids)
        for k, layer in enumerate(self.layers):
            x = layer.forward(x)
            if k < len(self.dropouts):
                x = self.dropouts[k].forward(x)
        return self.classifier.forward(x)

    def backward(self, dlogits) -> None:
        dx = self.classifier.backward(dlogits)
        for k in range(len(self.layers) - 1, -1, -1):
            if k < len(self.dropouts):
                dx = self.dropouts[k].backward(dx)
            dx = self.layers[k].backward(dx)
        self.embedding.backward(dx)

    def named_tensors(self) -> dict[str, np.ndarray]:
        return {p.name: p.value for p in self.parameters()}
