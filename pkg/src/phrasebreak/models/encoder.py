"""Transformer-encoder phrasing model and its masked-LM pre-training head."""

from __future__ import annotations

import numpy as np

from phrasebreak.neural.config import ModelConfig
from phrasebreak.neural.layers import Dense, Dropout, Embedding, LayerNorm, TransformerEncoderBlock
from phrasebreak.neural.param import check_unique_names


class EncoderBody:
    """Subword + learned position embeddings feeding N post-norm blocks.

    Tensor names are stable across head types so that a fine-tune run can
    load any encoder checkpoint's body.
    """

    def __init__(self, config: ModelConfig, rng, dtype=np.float32):
        width = config.hidden_size
        self.config = config
        self.token_emb = Embedding(config.vocab_size, width, rng, "body.token_emb", dtype, init="normal")
        self.pos_emb = Embedding(config.max_len, width, rng, "body.pos_emb", dtype, init="normal")
        self.emb_ln = LayerNorm(width, "body.emb_ln", dtype)
        self.emb_drop = Dropout(config.dropout_p, rng)
        self.blocks = [
            TransformerEncoderBlock(
                width, config.num_heads, config.ffn_size, rng,
                dropout_p=config.dropout_p, name=f"body.blocks.{k}", dtype=dtype,
            )
            for k in range(config.num_layers)
        ]

    def parameters(self):
        params = self.token_emb.parameters() + self.pos_emb.parameters() + self.emb_ln.parameters()
        for block in self.blocks:
            params += block.parameters()
        return params

    def set_training(self, training: bool) -> None:
        self.emb_drop.set_training(training)
        for block in self.blocks:
            block.set_training(training)

    def forward(self, piece_ids, pad_mask=None) -> np.ndarray:
        T = len(piece_ids)
        if T > self.config.max_len:
            raise ValueError(f"sequence of {T} pieces exceeds max_len {self.config.max_len}")
        x = self.token_emb.forward(piece_ids) + self.pos_emb.forward(np.arange(T))
        x = self.emb_drop.forward(self.emb_ln.forward(x))
        for block in self.blocks:
            x = block.forward(x, pad_mask)
        return x

    def backward(self, dout) -> None:
        for block in reversed(self.blocks):
            dout = block.backward(dout)
        dout = self.emb_ln.backward(self.emb_drop.backward(dout))
        self.token_emb.backward(dout)
        self.pos_emb.backward(dout)


class EncoderPhrasingModel:
    """Encoder body plus a token-classification head over [NB, B]."""

    kind = "encoder_classifier"

    def __init__(self, config: ModelConfig, vocab, rng=None, dtype=np.float32):
        if config.variant != "encoder":
            raise ValueError(f"expected an encoder config, got {config.variant!r}")
        if len(vocab) != config.vocab_size:
            raise ValueError(
                f"vocabulary has {len(vocab)} pieces but config says {config.vocab_size}"
            )
        rng = rng if rng is not None else np.random.default_rng(0)
        self.config = config
        self.vocab = vocab
        self.body = EncoderBody(config, rng, dtype)
        self.head = Dense(config.hidden_size, config.num_labels, rng, "head", dtype, init="normal")
        check_unique_names(self.parameters())

    @property
    def subword_vocab(self):
        return self.vocab

    def parameters(self):
        return self.body.parameters() + self.head.parameters()

    def set_training(self, training: bool) -> None:
        self.body.set_training(training)

    def forward(self, piece_ids, pad_mask=None) -> np.ndarray:
        return self.head.forward(self.body.forward(piece_ids, pad_mask))

    def backward(self, dlogits) -> None:
        self.body.backward(self.head.backward(dlogits))

    def named_tensors(self) -> dict[str, np.ndarray]:
        return {p.name: p.value for p in self.parameters()}


class EncoderMlmModel:
    """Encoder body plus a masked-LM projection back onto the piece vocabulary."""

    kind = "encoder_mlm"

    def __init__(self, config: ModelConfig, vocab, rng=None, dtype=np.float32):
        if config.variant != "encoder":
            raise ValueError(f"expected an encoder config, got {config.variant!r}")
        if len(vocab) != config.vocab_size:
            raise ValueError(
                f"vocabulary has {len(vocab)} pieces but config says {config.vocab_size}"
            )
        rng = rng if rng is not None else np.random.default_rng(0)
        self.config = config
        self.vocab = vocab
        self.body = EncoderBody(config, rng, dtype)
        self.mlm_head = Dense(config.hidden_size, config.vocab_size, rng, "mlm_head", dtype, init="normal")
        check_unique_names(self.parameters())

    @property
    def subword_vocab(self):
        return self.vocab

    def parameters(self):
        return self.body.parameters() + self.mlm_head.parameters()

    def set_training(self, training: bool) -> None:
        self.body.set_training(training)

    def forward(self, piece_ids, pad_mask=None) -> np.ndarray:
        return self.mlm_head.forward(self.body.forward(piece_ids, pad_mask))

    def backward(self, dlogits) -> None:
        self.body.backward(self.mlm_head.backward(dlogits))

    def named_tensors(self) -> dict[str, np.ndarray]:
        return {p.name: p.value for p in self.parameters()}
