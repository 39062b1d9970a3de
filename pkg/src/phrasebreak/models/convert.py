"""One-way converter from externally published encoder weights.

Takes a flat {name: array} mapping using the standard published layout
(torch Linear convention, [out, in] weight matrices) plus the matching
WordPiece vocabulary file, and writes a checkpoint directory this toolkit
can fine-tune. Nothing here downloads anything; obtaining the tensors is
the caller's job (e.g. dumped once from any framework to .npz).

Name mapping (N = block index):

    embeddings.word_embeddings.weight          -> body.token_emb.weight  (+ type fold)
    embeddings.position_embeddings.weight      -> body.pos_emb.weight
    embeddings.token_type_embeddings.weight    -> folded into token_emb (row 0)
    embeddings.LayerNorm.weight / .bias        -> body.emb_ln.gamma / .beta
    encoder.layer.N.attention.self.query.*     -> body.blocks.N.attn.Wq / .bq
    encoder.layer.N.attention.self.key.weight  -> body.blocks.N.attn.Wk (key bias dropped)
    encoder.layer.N.attention.self.value.*     -> body.blocks.N.attn.Wv / .bv
    encoder.layer.N.attention.output.dense.*   -> body.blocks.N.attn.Wo / .bo
    encoder.layer.N.attention.output.LayerNorm -> body.blocks.N.ln1.gamma / .beta
    encoder.layer.N.intermediate.dense.*       -> body.blocks.N.ffn.expand.W / .b
    encoder.layer.N.output.dense.*             -> body.blocks.N.ffn.project.W / .b
    encoder.layer.N.output.LayerNorm.*         -> body.blocks.N.ln2.gamma / .beta

Single-segment inputs make the type-0 embedding a constant addend before the
embedding LayerNorm, so folding it into every word-embedding row is exact.
The key-projection bias is a null parameter of softmax attention and is
dropped. Linear weights are transposed to this package's [in, out] layout.
A fresh masked-LM head is attached so the result is a complete, loadable
encoder_mlm checkpoint; fine-tuning reads only the body tensors anyway.
"""

from __future__ import annotations

import re

import numpy as np

from phrasebreak.errors import CheckpointError
from phrasebreak.models.checkpoint import save_checkpoint
from phrasebreak.models.encoder import EncoderMlmModel
from phrasebreak.neural.config import ModelConfig
from phrasebreak.textproc import SubwordVocabulary

_LAYER_RE = re.compile(r"encoder\.layer\.(\d+)\.")


def _strip_prefix(external: dict[str, np.ndarray]) -> dict[str, np.ndarray]:
    """Drop a leading model-name prefix like `bert.` when every key has it."""
    prefixes = {name.split(".", 1)[0] for name in external}
    if len(prefixes) == 1 and "embeddings" not in prefixes:
        prefix = next(iter(prefixes))
        return {name[len(prefix) + 1:]: value for name, value in external.items()}
    return external


def _require(external: dict[str, np.ndarray], name: str) -> np.ndarray:
    if name not in external:
        raise CheckpointError(f"external weights missing tensor {name!r}")
    return np.asarray(external[name], dtype=np.float32)


def infer_encoder_config(external: dict[str, np.ndarray], num_heads: int,
                         dropout_p: float = 0.1) -> ModelConfig:
    """Read vocab size, width, depth, FFN size, and max_len off the shapes."""
    external = _strip_prefix(external)
    word_emb = _require(external, "embeddings.word_embeddings.weight")
    pos_emb = _require(external, "embeddings.position_embeddings.weight")
    layers = {int(m.group(1)) for name in external for m in [_LAYER_RE.match(name)] if m}
    if not layers:
        raise CheckpointError("external weights contain no encoder layers")
    num_layers = max(layers) + 1
    ffn = _require(external, "encoder.layer.0.intermediate.dense.weight")
    return ModelConfig(
        variant="encoder",
        vocab_size=word_emb.shape[0],
        embedding_dim=word_emb.shape[1],
        hidden_size=word_emb.shape[1],
        num_layers=num_layers,
        num_heads=num_heads,
        ffn_size=ffn.shape[0],
        dropout_p=dropout_p,
        max_len=pos_emb.shape[0],
    )


def convert_encoder_weights(external: dict[str, np.ndarray],
                            vocab: SubwordVocabulary,
                            num_heads: int,
                            out_dir,
                            dropout_p: float = 0.1,
                            head_seed: int = 0):
    """Write a fine-tunable encoder_mlm checkpoint from external weights."""
    external = _strip_prefix(external)
    config = infer_encoder_config(external, num_heads, dropout_p)
    if len(vocab) != config.vocab_size:
        raise CheckpointError(
            f"vocabulary has {len(vocab)} pieces but the embedding table has {config.vocab_size} rows"
        )
    model = EncoderMlmModel(config, vocab, np.random.default_rng(head_seed))

    def linear(name):
        weight = _require(external, f"{name}.weight").T.copy()
        bias = _require(external, f"{name}.bias").copy()
        return weight, bias

    token = _require(external, "embeddings.word_embeddings.weight").copy()
    type_key = "embeddings.token_type_embeddings.weight"
    if type_key in external:
        token += np.asarray(external[type_key], dtype=np.float32)[0]
    assigned = {
        "body.token_emb.weight": token,
        "body.pos_emb.weight": _require(external, "embeddings.position_embeddings.weight"),
        "body.emb_ln.gamma": _require(external, "embeddings.LayerNorm.weight"),
        "body.emb_ln.beta": _require(external, "embeddings.LayerNorm.bias"),
    }
    for n in range(config.num_layers):
        base = f"encoder.layer.{n}"
        ours = f"body.blocks.{n}"
        wq, bq = linear(f"{base}.attention.self.query")
        wv, bv = linear(f"{base}.attention.self.value")
        wo, bo = linear(f"{base}.attention.output.dense")
        expand_w, expand_b = linear(f"{base}.intermediate.dense")
        project_w, project_b = linear(f"{base}.output.dense")
        assigned.update({
            f"{ours}.attn.Wq": wq,
            f"{ours}.attn.bq": bq,
            f"{ours}.attn.Wk": _require(external, f"{base}.attention.self.key.weight").T.copy(),
            f"{ours}.attn.Wv": wv,
            f"{ours}.attn.bv": bv,
            f"{ours}.attn.Wo": wo,
            f"{ours}.attn.bo": bo,
            f"{ours}.ln1.gamma": _require(external, f"{base}.attention.output.LayerNorm.weight"),
            f"{ours}.ln1.beta": _require(external, f"{base}.attention.output.LayerNorm.bias"),
            f"{ours}.ffn.expand.W": expand_w,
            f"{ours}.ffn.expand.b": expand_b,
            f"{ours}.ffn.project.W": project_w,
            f"{ours}.ffn.project.b": project_b,
            f"{ours}.ln2.gamma": _require(external, f"{base}.output.LayerNorm.weight"),
            f"{ours}.ln2.beta": _require(external, f"{base}.output.LayerNorm.bias"),
        })

    params = {p.name: p for p in model.body.parameters()}
    problems = []
    for name, value in assigned.items():
        param = params.get(name)
        if param is None:
            problems.append(f"no such model tensor {name}")
        elif param.value.shape != value.shape:
            problems.append(
                f"shape mismatch for {name}: external {list(value.shape)} vs model {list(param.value.shape)}"
            )
    if problems:
        raise CheckpointError("; ".join(problems))
    for name, value in assigned.items():
        params[name].value[...] = value.astype(np.float32)

    model.set_training(False)
    return save_checkpoint(model, out_dir)
