"""Model and training configuration records."""

from __future__ import annotations

from dataclasses import asdict, dataclass


@dataclass
class ModelConfig:
    """Architecture hyperparameters for either model variant.

    For the encoder variant, embedding_dim and hidden_size are the encoder
    width and must be equal; num_heads and ffn_size apply only there.
    """

    variant: str
    vocab_size: int
    embedding_dim: int
    hidden_size: int
    num_layers: int
    num_heads: int = 0
    ffn_size: int = 0
    dropout_p: float = 0.0
    max_len: int = 512
    num_labels: int = 2

    def __post_init__(self):
        if self.variant not in ("blstm", "encoder"):
            raise ValueError(f"unknown model variant {self.variant!r}")
        for name in ("vocab_size", "embedding_dim", "hidden_size", "num_layers",
                     "max_len", "num_labels"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1, got {getattr(self, name)}")
        if not 0.0 <= self.dropout_p < 1.0:
            raise ValueError(f"dropout_p must be in [0, 1), got {self.dropout_p}")
        if self.variant == "encoder":
            if self.num_heads < 1 or self.ffn_size < 1:
                raise ValueError("encoder variant needs num_heads and ffn_size >= 1")
            if self.embedding_dim != self.hidden_size:
                raise ValueError("encoder width must match embedding_dim")
            if self.hidden_size % self.num_heads != 0:
                raise ValueError(
                    f"num_heads {self.num_heads} must divide width {self.hidden_size}"
                )

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "ModelConfig":
        return cls(**data)


def blstm_config(vocab_size: int, embedding_dim: int = 300, hidden_size: int = 512,
                 num_layers: int = 2, dropout_p: float = 0.0) -> ModelConfig:
    """Default BLSTM tagger: 300-dim embeddings, 2 layers of 512 per direction."""
    return ModelConfig(
        variant="blstm",
        vocab_size=vocab_size,
        embedding_dim=embedding_dim,
        hidden_size=hidden_size,
        num_layers=num_layers,
        dropout_p=dropout_p,
    )


def encoder_config(vocab_size: int, width: int = 256, num_layers: int = 4,
                   num_heads: int = 4, ffn_size: int = 1024, max_len: int = 128,
                   dropout_p: float = 0.1) -> ModelConfig:
    """Desk-scale encoder: 4 layers, 4 heads, width 256, FFN 1024, 128 positions.

    The full-size 12x768 family configuration is expressible by overriding
    the arguments; nothing here depends on the small defaults.
    """
    return ModelConfig(
        variant="encoder",
        vocab_size=vocab_size,
        embedding_dim=width,
        hidden_size=width,
        num_layers=num_layers,
        num_heads=num_heads,
        ffn_size=ffn_size,
        dropout_p=dropout_p,
        max_len=max_len,
    )


@dataclass
class TrainConfig:
    """Optimization hyperparameters; the schedule is constant learning rate."""

    learning_rate: float
    batch_size: int = 64
    num_epochs: int = 10
    grad_clip_norm: float | None = None
    seed: int = 0
    lr_schedule: str = "constant"

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        # lr 0 is allowed so no-update runs (e.g. probing what fine-tuning
        # would touch) stay expressible; negative rates are rejected.
        if self.learning_rate < 0:
            raise ValueError(f"learning_rate must be >= 0, got {self.learning_rate}")
        if self.num_epochs < 1:
            raise ValueError(f"num_epochs must be >= 1, got {self.num_epochs}")
        if self.grad_clip_norm is not None and self.grad_clip_norm <= 0:
            raise ValueError("grad_clip_norm must be positive when given")
        if self.lr_schedule != "constant":
            raise ValueError(f"unsupported lr_schedule {self.lr_schedule!r}")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "TrainConfig":
        return cls(**data)
