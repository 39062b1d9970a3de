"""Shared test helpers: conditioned gradient checks and synthetic corpora."""

from __future__ import annotations

from phrasebreak.corpus import DatasetSplit, LabeledSequence
from phrasebreak.textproc import B, NB

# Lowercase word stock for randomized text tests.
WORD_STOCK = [
    "king", "queen", "forest", "river", "once", "upon", "time", "there",
    "lived", "walked", "spoke", "gold", "dragon", "castle", "morning",
    "night", "shadow", "bright", "don't", "it's", "stone", "road",
]


def tether_loss(loss_fn_inner, params, rng, strength=0.05):
    """Add a linear term c * sum(r . p) to a loss so no parameter coordinate
    has a near-zero gradient.

    Central differences measure linear terms exactly, so this conditions the
    relative-error metric (which floors its denominator at 1e-8) without
    hiding any disagreement between analytic and numeric gradients of the
    wrapped loss. The tether magnitudes are bounded away from zero.
    """
    tethers = {
        p.name: strength
        * rng.uniform(0.5, 1.5, size=p.value.shape)
        * rng.choice([-1.0, 1.0], size=p.value.shape)
        for p in params
    }

    def loss_fn(compute_grads=False):
        loss = loss_fn_inner(compute_grads=compute_grads)
        for p in params:
            loss += float((tethers[p.name] * p.value).sum())
            if compute_grads:
                p.grad += tethers[p.name]
        return loss

    return loss_fn


def randomize_parameters(params, rng, scale=0.6):
    """Re-draw parameter values at unit-ish scale for well-conditioned checks."""
    for p in params:
        p.value[...] = rng.normal(scale=scale, size=p.value.shape)


def random_labeled_sequence(rng, min_len=1, max_len=12, seq_id="") -> LabeledSequence:
    n = int(rng.integers(min_len, max_len + 1))
    words = [WORD_STOCK[int(rng.integers(len(WORD_STOCK)))] for _ in range(n)]
    labels = [B if rng.random() < 0.4 else NB for _ in range(n)]
    return LabeledSequence(words=words, labels=labels, id=seq_id)


TRIGGER_WORDS = ["stopa", "stopb", "stopc", "stopd", "stope"]
FILLER_WORDS = [f"word{i:02d}" for i in range(35)]


def trigger_rule_corpus(n_sequences, rng, min_len=6, max_len=12,
                        id_prefix="syn") -> DatasetSplit:
    """Sequences where B deterministically follows the five trigger words.

    Every other boundary is NB; the final word is B by the corpus convention.
    """
    sequences = []
    for i in range(n_sequences):
        n = int(rng.integers(min_len, max_len + 1))
        words = []
        for _ in range(n):
            if rng.random() < 0.25:
                words.append(TRIGGER_WORDS[int(rng.integers(len(TRIGGER_WORDS)))])
            else:
                words.append(FILLER_WORDS[int(rng.integers(len(FILLER_WORDS)))])
        labels = [B if w in TRIGGER_WORDS else NB for w in words]
        labels[-1] = B
        sequences.append(LabeledSequence(words=words, labels=labels, id=f"{id_prefix}-{i}"))
    return DatasetSplit(name="train", sequences=sequences)


def memorization_split(n_sequences, rng, vocab_size=40, min_len=5, max_len=10) -> DatasetSplit:
    """Random words with random labels: learnable only by memorization."""
    stock = [f"tok{i:02d}" for i in range(vocab_size)]
    sequences = []
    for i in range(n_sequences):
        n = int(rng.integers(min_len, max_len + 1))
        words = [stock[int(rng.integers(vocab_size))] for _ in range(n)]
        labels = [B if rng.random() < 0.5 else NB for _ in range(n)]
        labels[-1] = B
        sequences.append(LabeledSequence(words=words, labels=labels, id=f"mem-{i}"))
    return DatasetSplit(name="train", sequences=sequences)


def token_accuracy(model, split: DatasetSplit) -> float:
    from phrasebreak.models.decode import greedy_decode

    correct = 0
    total = 0
    for seq in split.sequences:
        hyp = greedy_decode(model, seq.words)
        correct += sum(1 for a, b in zip(hyp, seq.labels) if a == b)
        total += len(seq.labels)
    return correct / total
