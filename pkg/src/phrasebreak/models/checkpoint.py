"""Checkpoint persistence.

A checkpoint is a directory: `config.json` (versioned model configuration),
`tensors.bin` (the binary tensor archive), and `vocab.txt` (word or subword
vocabulary, one entry per line).

Archive layout: 8-byte magic, 8-byte little-endian manifest length, UTF-8
JSON manifest, then packed little-endian tensor data. Manifest offsets are
relative to the start of the data section.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from phrasebreak.errors import CheckpointError
from phrasebreak.neural.config import ModelConfig

MAGIC = b"PBCKPT01"
FORMAT_VERSION = 1

_DTYPE_TO_TAG = {np.dtype(np.float32): "f32", np.dtype(np.float64): "f64"}
_TAG_TO_DTYPE = {"f32": np.dtype("<f4"), "f64": np.dtype("<f8")}

CONFIG_FILE = "config.json"
TENSORS_FILE = "tensors.bin"
VOCAB_FILE = "vocab.txt"


def save_tensor_archive(path, tensors: dict[str, np.ndarray]) -> None:
    manifest = []
    blobs = []
    offset = 0
    for name, array in tensors.items():
        tag = _DTYPE_TO_TAG.get(array.dtype)
        if tag is None:
            raise CheckpointError(f"tensor {name!r} has unsupported dtype {array.dtype}")
        blob = np.ascontiguousarray(array, dtype=_TAG_TO_DTYPE[tag]).tobytes()
        manifest.append({
            "name": name,
            "dtype": tag,
            "shape": list(array.shape),
            "offset": offset,
            "nbytes": len(blob),
        })
        blobs.append(blob)
        offset += len(blob)
    manifest_bytes = json.dumps(manifest).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<Q", len(manifest_bytes)))
        fh.write(manifest_bytes)
        for blob in blobs:
            fh.write(blob)


def load_tensor_archive(path) -> dict[str, np.ndarray]:
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < len(MAGIC) or raw[: len(MAGIC)] != MAGIC:
        raise CheckpointError(f"{path}: bad magic, not a tensor archive")
    header_end = len(MAGIC) + 8
    if len(raw) < header_end:
        raise CheckpointError(f"{path}: truncated before manifest length")
    (manifest_len,) = struct.unpack("<Q", raw[len(MAGIC):header_end])
    manifest_end = header_end + manifest_len
    if len(raw) < manifest_end:
        raise CheckpointError(f"{path}: truncated manifest")
    try:
        manifest = json.loads(raw[header_end:manifest_end].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"{path}: unreadable manifest: {exc}") from exc
    data = raw[manifest_end:]
    tensors = {}
    for entry in manifest:
        name = entry["name"]
        dtype = _TAG_TO_DTYPE.get(entry["dtype"])
        if dtype is None:
            raise CheckpointError(f"{path}: tensor {name!r} has unknown dtype tag {entry['dtype']!r}")
        shape = tuple(entry["shape"])
        expected_nbytes = int(np.prod(shape, dtype=np.int64)) * dtype.itemsize if shape else dtype.itemsize
        if shape == ():
            expected_nbytes = dtype.itemsize
        if entry["nbytes"] != expected_nbytes:
            raise CheckpointError(
                f"{path}: tensor {name!r} manifest says {entry['nbytes']} bytes "
                f"but shape {list(shape)} needs {expected_nbytes}"
            )
        start, end = entry["offset"], entry["offset"] + entry["nbytes"]
        if end > len(data):
            raise CheckpointError(f"{path}: truncated data for tensor {name!r}")
        array = np.frombuffer(data[start:end], dtype=dtype).reshape(shape)
        tensors[name] = array.astype(array.dtype.newbyteorder("="), copy=True)
    return tensors


def assign_tensors(params, tensors: dict[str, np.ndarray],
                   allow_extra: bool = False) -> None:
    """Copy archive tensors into parameters by name, validating shapes."""
    by_name = {p.name: p for p in params}
    missing = sorted(set(by_name) - set(tensors))
    extra = sorted(set(tensors) - set(by_name))
    problems = []
    if missing:
        problems.append(f"missing tensors: {missing}")
    if extra and not allow_extra:
        problems.append(f"unexpected tensors: {extra}")
    for name in sorted(set(by_name) & set(tensors)):
        want = by_name[name].value.shape
        have = tensors[name].shape
        if want != have:
            problems.append(f"shape mismatch for {name}: checkpoint {list(have)} vs model {list(want)}")
    if problems:
        raise CheckpointError("; ".join(problems))
    for name, param in by_name.items():
        param.value[...] = tensors[name].astype(param.value.dtype)


def save_checkpoint(model, directory) -> Path:
    """Write config.json, tensors.bin, and vocab.txt for any model object."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    config = {
        "format_version": FORMAT_VERSION,
        "kind": model.kind,
        "model": model.config.to_dict(),
    }
    with open(directory / CONFIG_FILE, "w", encoding="utf-8") as fh:
        json.dump(config, fh, indent=2, sort_keys=True)
        fh.write("\n")
    save_tensor_archive(directory / TENSORS_FILE, model.named_tensors())
    model.vocab.save(directory / VOCAB_FILE)
    return directory


def read_checkpoint_config(directory) -> dict:
    directory = Path(directory)
    config_path = directory / CONFIG_FILE
    if not config_path.exists():
        raise CheckpointError(f"{directory}: no {CONFIG_FILE}")
    with open(config_path, encoding="utf-8") as fh:
        config = json.load(fh)
    version = config.get("format_version")
    if version != FORMAT_VERSION:
        raise CheckpointError(f"{directory}: unsupported format_version {version!r}")
    return config


def load_checkpoint(directory):
    """Rebuild a model from a checkpoint directory, tensors bit-exact.

    The returned model is in eval mode and safe for concurrent decoding.
    """
    from phrasebreak.models.blstm import BlstmPhrasingModel
    from phrasebreak.models.encoder import EncoderMlmModel, EncoderPhrasingModel
    from phrasebreak.textproc import SubwordVocabulary, Vocabulary

    directory = Path(directory)
    config = read_checkpoint_config(directory)
    model_config = ModelConfig.from_dict(config["model"])
    kind = config.get("kind")
    rng = np.random.default_rng(0)
    if kind == "blstm":
        vocab = Vocabulary.load(directory / VOCAB_FILE)
        model = BlstmPhrasingModel(model_config, vocab, rng)
    elif kind == "encoder_classifier":
        vocab = SubwordVocabulary.load(directory / VOCAB_FILE)
        model = EncoderPhrasingModel(model_config, vocab, rng)
    elif kind == "encoder_mlm":
        vocab = SubwordVocabulary.load(directory / VOCAB_FILE)
        model = EncoderMlmModel(model_config, vocab, rng)
    else:
        raise CheckpointError(f"{directory}: unknown checkpoint kind {kind!r}")
    tensors = load_tensor_archive(directory / TENSORS_FILE)
    assign_tensors(model.parameters(), tensors)
    model.set_training(False)
    return model
