"""Alignment ingestion, break-label derivation, dataset splits, and comma augmentation.

Ground truth comes from word-level forced alignments: a word boundary is a
Break when the aligned audio pauses there for at least `min_pause` seconds.
All functions are pure, so per-utterance work parallelizes trivially.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass

from phrasebreak.errors import AlignmentParseError, EmptyInputError, SplitSpecError
from phrasebreak.textproc import B, LABEL_TO_ID, NB, insert_breaks_as_commas, normalize_token

# Aligned silences shorter than this are treated as alignment jitter, not
# pauses. Configurable everywhere it matters.
DEFAULT_MIN_PAUSE = 0.030

SPLIT_NAMES = ("train", "dev", "test")

# Tolerance for float comparisons on segment times.
_TIME_EPS = 1e-9


@dataclass(frozen=True)
class AlignmentSegment:
    """One aligned token: [start, end) in seconds. An empty token is silence."""

    start: float
    end: float
    token: str

    @property
    def is_silence(self) -> bool:
        return self.token == ""

    @property
    def duration(self) -> float:
        return self.end - self.start


@dataclass(frozen=True)
class AlignmentFormatConfig:
    """Knobs for the flat `start end token` line format."""

    silence_tokens: frozenset[str] = frozenset({"", "sil", "sp", "spn"})


@dataclass
class Utterance:
    id: str
    segments: list[AlignmentSegment]
    transcript: str | None = None

    def word_segments(self) -> list[AlignmentSegment]:
        return [s for s in self.segments if not s.is_silence]

    def words(self) -> list[str]:
        return [s.token for s in self.word_segments()]


@dataclass
class LabeledSequence:
    """Words plus one B/NB label per word; the universal training record."""

    words: list[str]
    labels: list[str]
    id: str = ""

    def __post_init__(self):
        if len(self.words) != len(self.labels):
            raise ValueError(
                f"{self.id or 'sequence'}: {len(self.words)} words but {len(self.labels)} labels"
            )
        bad = [l for l in self.labels if l not in LABEL_TO_ID]
        if bad:
            raise ValueError(f"{self.id or 'sequence'}: labels must be B or NB, got {bad[:3]}")


@dataclass
class DatasetSplit:
    name: str
    sequences: list[LabeledSequence]

    def __len__(self) -> int:
        return len(self.sequences)


def parse_alignment(raw, format_config: AlignmentFormatConfig | None = None,
                    utterance_id: str = "") -> Utterance:
    """Parse one alignment file (bytes or str) into an Utterance.

    Lines are `start end token` with whitespace separation; a line with only
    two fields, or whose token is a silence sentinel, becomes a silence
    segment with an empty token. Word tokens are lowercased and stripped of
    punctuation at ingestion.
    """
    config = format_config or AlignmentFormatConfig()
    if isinstance(raw, bytes):
        raw = raw.decode("utf-8")
    segments = []
    prev_end = None
    for line_number, line in enumerate(raw.splitlines(), start=1):
        if not line.strip():
            continue
        parts = line.split()
        if len(parts) not in (2, 3):
            raise AlignmentParseError(
                f"expected `start end token`, got {len(parts)} fields", line_number
            )
        try:
            start, end = float(parts[0]), float(parts[1])
        except ValueError:
            raise AlignmentParseError(
                f"non-numeric times {parts[0]!r} {parts[1]!r}", line_number
            ) from None
        if start < 0:
            raise AlignmentParseError(f"negative start time {start}", line_number)
        if end <= start:
            raise AlignmentParseError(f"end {end} <= start {start}", line_number)
        if prev_end is not None and start < prev_end - _TIME_EPS:
            raise AlignmentParseError(
                f"segment starting at {start} overlaps previous segment", line_number
            )
        prev_end = end
        token = parts[2] if len(parts) == 3 else ""
        if token.lower() in config.silence_tokens:
            token = ""
        else:
            token = normalize_token(token)
        segments.append(AlignmentSegment(start, end, token))
    if not segments:
        raise EmptyInputError(f"alignment file {utterance_id or '<stream>'} is empty")
    utt = Utterance(id=utterance_id, segments=segments)
    if not utt.word_segments():
        raise EmptyInputError(
            f"alignment file {utterance_id or '<stream>'} has no word segments"
        )
    return utt


def derive_break_labels(utterance: Utterance, min_pause: float = DEFAULT_MIN_PAUSE) -> LabeledSequence:
    """Label each word B iff a pause of >= min_pause seconds follows it.

    A pause is either an aligned silence segment or a bare inter-word time
    gap (robust to aligners that omit short sil tokens); either way it shows
    up as the gap between this word's end and the next word's start. The
    final word is always labeled B: the utterance end is a break, and scoring
    excludes it downstream.
    """
    if min_pause < 0:
        raise ValueError(f"min_pause must be >= 0, got {min_pause}")
    word_segs = utterance.word_segments()
    if not word_segs:
        raise EmptyInputError(f"utterance {utterance.id or '<anon>'} has no words")
    labels = []
    for current, following in zip(word_segs, word_segs[1:]):
        gap = following.start - current.end
        labels.append(B if gap + _TIME_EPS >= min_pause else NB)
    labels.append(B)
    return LabeledSequence(words=[s.token for s in word_segs], labels=labels, id=utterance.id)


@dataclass
class SplitSpec:
    """Assigns every utterance id to exactly one of train/dev/test.

    Either give explicit id lists, or ratios plus a seed: ids are ordered by
    a seeded hash and sliced, so membership is deterministic, independent of
    input order, and the split sizes are exact (largest-remainder rounding).
    """

    explicit: dict[str, list[str]] | None = None
    ratios: dict[str, float] | None = None
    seed: int = 0

    def __post_init__(self):
        if (self.explicit is None) == (self.ratios is None):
            raise SplitSpecError("give exactly one of explicit lists or ratios")
        if self.explicit is not None:
            unknown = set(self.explicit) - set(SPLIT_NAMES)
            if unknown:
                raise SplitSpecError(f"unknown split names: {sorted(unknown)}")
        if self.ratios is not None:
            unknown = set(self.ratios) - set(SPLIT_NAMES)
            if unknown:
                raise SplitSpecError(f"unknown split names: {sorted(unknown)}")
            total = sum(self.ratios.values())
            if total <= 0 or any(r < 0 for r in self.ratios.values()):
                raise SplitSpecError(f"ratios must be non-negative with a positive sum, got {self.ratios}")

    def assign(self, ids: list[str]) -> dict[str, list[str]]:
        """Map split name -> ids, covering every input id exactly once."""
        if len(set(ids)) != len(ids):
            dupes = sorted({i for i in ids if ids.count(i) > 1})
            raise SplitSpecError(f"duplicate utterance ids: {dupes[:5]}")
        if self.explicit is not None:
            return self._assign_explicit(ids)
        return self._assign_by_hash(ids)

    def _assign_explicit(self, ids):
        membership = {}
        for name in SPLIT_NAMES:
            for uid in self.explicit.get(name, []):
                if uid in membership:
                    raise SplitSpecError(
                        f"id {uid!r} listed in both {membership[uid]!r} and {name!r}"
                    )
                membership[uid] = name
        missing = [uid for uid in ids if uid not in membership]
        if missing:
            raise SplitSpecError(f"ids not assigned to any split: {missing[:5]}")
        extra = set(membership) - set(ids)
        if extra:
            raise SplitSpecError(f"split lists reference unknown ids: {sorted(extra)[:5]}")
        return {
            name: [uid for uid in ids if membership[uid] == name] for name in SPLIT_NAMES
        }

    def _assign_by_hash(self, ids):
        def hash_key(uid):
            digest = hashlib.sha256(f"{self.seed}:{uid}".encode("utf-8")).hexdigest()
            return (digest, uid)

        ordered = sorted(ids, key=hash_key)
        total_ratio = sum(self.ratios.get(name, 0.0) for name in SPLIT_NAMES)
        n = len(ordered)
        exact = {name: n * self.ratios.get(name, 0.0) / total_ratio for name in SPLIT_NAMES}
        counts = {name: int(exact[name]) for name in SPLIT_NAMES}
        remainder = n - sum(counts.values())
        by_fraction = sorted(
            SPLIT_NAMES, key=lambda name: (-(exact[name] - counts[name]), name)
        )
        for name in by_fraction[:remainder]:
            counts[name] += 1
        assignment = {}
        cursor = 0
        for name in SPLIT_NAMES:
            assignment[name] = ordered[cursor:cursor + counts[name]]
            cursor += counts[name]
        return assignment


def build_dataset(utterances: list[Utterance], split_spec: SplitSpec,
                  min_pause: float = DEFAULT_MIN_PAUSE) -> list[DatasetSplit]:
    """Label every utterance and partition into disjoint train/dev/test splits."""
    ids = [u.id for u in utterances]
    assignment = split_spec.assign(ids)
    by_id = {u.id: u for u in utterances}
    splits = []
    for name in SPLIT_NAMES:
        sequences = [derive_break_labels(by_id[uid], min_pause) for uid in assignment[name]]
        splits.append(DatasetSplit(name=name, sequences=sequences))
    return splits


def augment_text_with_commas(seq: LabeledSequence) -> str:
    """Rewrite a labeled sequence as text with commas at its break boundaries.

    Every non-final word labeled B gets a comma appended; the final word gets
    a terminal period. This is how pause-at-comma TTS training texts are made.
    """
    return insert_breaks_as_commas(seq.words, seq.labels)


def write_dataset_jsonl(split: DatasetSplit, path) -> None:
    """Write one `{"id", "words", "labels"}` object per utterance."""
    with open(path, "w", encoding="utf-8") as fh:
        for seq in split.sequences:
            record = {"id": seq.id, "words": seq.words, "labels": seq.labels}
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")


def read_dataset_jsonl(path, name: str = "") -> DatasetSplit:
    sequences = []
    with open(path, encoding="utf-8") as fh:
        for line_number, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
                sequences.append(
                    LabeledSequence(words=record["words"], labels=record["labels"],
                                    id=record.get("id", ""))
                )
            except (json.JSONDecodeError, KeyError, ValueError) as exc:
                raise ValueError(f"{path}:{line_number}: bad dataset record: {exc}") from exc
    return DatasetSplit(name=name or str(path), sequences=sequences)


def split_stats(split: DatasetSplit) -> dict:
    """Utterance/word counts and the break rate over non-final boundaries."""
    words = sum(len(s.words) for s in split.sequences)
    scored = sum(max(len(s.words) - 1, 0) for s in split.sequences)
    breaks = sum(
        1 for s in split.sequences for label in s.labels[:-1] if label == B
    )
    return {
        "utterances": len(split.sequences),
        "words": words,
        "scored_boundaries": scored,
        "break_rate": (breaks / scored) if scored else 0.0,
    }
