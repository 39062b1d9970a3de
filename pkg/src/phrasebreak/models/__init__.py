"""Phrasing models: BLSTM tagger, transformer-encoder tagger, training, decoding."""

from phrasebreak.models.blstm import BlstmPhrasingModel
from phrasebreak.models.checkpoint import (
    load_checkpoint,
    load_tensor_archive,
    save_checkpoint,
    save_tensor_archive,
)
from phrasebreak.models.decode import greedy_decode, punctuate_text
from phrasebreak.models.encoder import EncoderMlmModel, EncoderPhrasingModel
from phrasebreak.models.training import (
    finetune_encoder,
    pretrain_encoder_mlm,
    train_blstm,
)

__all__ = [
    "BlstmPhrasingModel",
    "EncoderMlmModel",
    "EncoderPhrasingModel",
    "finetune_encoder",
    "greedy_decode",
    "load_checkpoint",
    "load_tensor_archive",
    "pretrain_encoder_mlm",
    "punctuate_text",
    "save_checkpoint",
    "save_tensor_archive",
    "train_blstm",
]
