"""Tokenization, vocabularies, WordPiece segmentation, and punctuation handling.

Everything here is pure: vocabularies are immutable after construction and all
functions return new objects, so concurrent readers are safe.
"""

from __future__ import annotations

import collections
import re
from dataclasses import dataclass, field

from phrasebreak.errors import EmptyInputError

# Boundary labels. NB deliberately gets class id 0 so that argmax tie-breaking
# prefers the safer "no pause" prediction.
NB = "NB"
B = "B"
LABEL_TO_ID = {NB: 0, B: 1}
ID_TO_LABEL = [NB, B]

# Piece-level label for positions excluded from loss and metrics.
IGNORE = "IGNORE"

PAD_TOKEN = "[PAD]"
UNK_TOKEN = "[UNK]"
CLS_TOKEN = "[CLS]"
SEP_TOKEN = "[SEP]"
MASK_TOKEN = "[MASK]"
CONTINUATION_PREFIX = "##"

# A word run: unicode word characters (underscore excluded) plus apostrophes.
_WORD_RUN = re.compile(r"(?:[^\W_]|')+", re.UNICODE)
_WORD_OR_COMMA = re.compile(r"(?:[^\W_]|')+|,", re.UNICODE)


def _clean_run(run: str) -> str:
    """Strip edge apostrophes from a word run; may return ''."""
    return run.strip("'")


def normalize_token(token: str) -> str:
    """Normalize a single aligned token: lowercase, strip punctuation.

    Internal apostrophes are kept ("don't"); all other punctuation is removed.
    A token made entirely of punctuation normalizes to the empty string.
    """
    runs = [_clean_run(r) for r in _WORD_RUN.findall(token.lower())]
    return "".join(r for r in runs if r)


def normalize_and_tokenize(text: str) -> list[str]:
    """Lowercase, strip punctuation, and whitespace-split `text` into words.

    Raises EmptyInputError when no word characters remain.
    """
    words = [_clean_run(r) for r in _WORD_RUN.findall(text.lower())]
    words = [w for w in words if w]
    if not words:
        raise EmptyInputError("text contains no word characters")
    return words


def strip_punctuation(text: str) -> tuple[list[str], set[int]]:
    """Tokenize `text` and report which word boundaries carried a comma.

    Returns (words, comma_boundaries) where index i in the boundary set means
    a comma followed word i. Commas before the first word are dropped.
    """
    words: list[str] = []
    comma_after: set[int] = set()
    for match in _WORD_OR_COMMA.findall(text.lower()):
        if match == ",":
            if words:
                comma_after.add(len(words) - 1)
            continue
        cleaned = _clean_run(match)
        if cleaned:
            words.append(cleaned)
    if not words:
        raise EmptyInputError("text contains no word characters")
    return words, comma_after


def insert_breaks_as_commas(words: list[str], labels: list[str]) -> str:
    """Render words with a comma after every non-final B boundary.

    The final word receives a terminal period unless it already ends with
    terminal punctuation.
    """
    if len(words) != len(labels):
        raise ValueError(
            f"words/labels length mismatch: {len(words)} vs {len(labels)}"
        )
    if not words:
        raise EmptyInputError("no words to punctuate")
    parts = []
    last = len(words) - 1
    for i, (word, label) in enumerate(zip(words, labels)):
        if label not in LABEL_TO_ID:
            raise ValueError(f"unknown label {label!r} at position {i}")
        if i < last and label == B:
            parts.append(word + ",")
        else:
            parts.append(word)
    text = " ".join(parts)
    if not text.endswith((".", "!", "?")):
        text += "."
    return text


@dataclass(frozen=True)
class Vocabulary:
    """Word-to-id map with reserved PAD=0 and UNK=1 entries."""

    word_to_id: dict[str, int]
    id_to_word: list[str]

    PAD = 0
    UNK = 1

    def __len__(self) -> int:
        return len(self.id_to_word)

    def encode(self, words: list[str]) -> list[int]:
        return [self.word_to_id.get(w, self.UNK) for w in words]

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for word in self.id_to_word:
                fh.write(word + "\n")

    @classmethod
    def load(cls, path) -> "Vocabulary":
        with open(path, encoding="utf-8") as fh:
            id_to_word = [line.rstrip("\n") for line in fh]
        if len(id_to_word) < 2 or id_to_word[0] != PAD_TOKEN or id_to_word[1] != UNK_TOKEN:
            raise ValueError(f"not a word vocabulary file: {path}")
        return cls({w: i for i, w in enumerate(id_to_word)}, id_to_word)


def build_vocab(train_split, min_freq: int = 2) -> Vocabulary:
    """Build a word vocabulary from a training split.

    Words with frequency >= min_freq are kept, ordered by frequency descending
    then lexicographically, so rebuilding from the same split is deterministic.
    """
    if min_freq < 1:
        raise ValueError("min_freq must be >= 1")
    sequences = getattr(train_split, "sequences", train_split)
    counts = collections.Counter()
    for seq in sequences:
        counts.update(seq.words)
    if not counts:
        raise EmptyInputError("cannot build a vocabulary from an empty split")
    kept = sorted(
        (w for w, c in counts.items() if c >= min_freq),
        key=lambda w: (-counts[w], w),
    )
    id_to_word = [PAD_TOKEN, UNK_TOKEN] + kept
    return Vocabulary({w: i for i, w in enumerate(id_to_word)}, id_to_word)


@dataclass(frozen=True)
class SubwordVocabulary:
    """WordPiece vocabulary with the usual five special tokens.

    File layout is the standard one piece per line, id = line number, so
    externally published uncased vocabularies import directly.
    """

    piece_to_id: dict[str, int]
    id_to_piece: list[str]

    def __post_init__(self):
        specials = [PAD_TOKEN, UNK_TOKEN, CLS_TOKEN, SEP_TOKEN, MASK_TOKEN]
        missing = [s for s in specials if s not in self.piece_to_id]
        if missing:
            raise ValueError(f"subword vocabulary missing special tokens: {missing}")
        ids = [self.piece_to_id[s] for s in specials]
        if len(set(ids)) != len(ids):
            raise ValueError("special token ids must be distinct")

    def __len__(self) -> int:
        return len(self.id_to_piece)

    @property
    def pad_id(self) -> int:
        return self.piece_to_id[PAD_TOKEN]

    @property
    def unk_id(self) -> int:
        return self.piece_to_id[UNK_TOKEN]

    @property
    def cls_id(self) -> int:
        return self.piece_to_id[CLS_TOKEN]

    @property
    def sep_id(self) -> int:
        return self.piece_to_id[SEP_TOKEN]

    @property
    def mask_id(self) -> int:
        return self.piece_to_id[MASK_TOKEN]

    def special_ids(self) -> set[int]:
        return {self.pad_id, self.unk_id, self.cls_id, self.sep_id, self.mask_id}

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for piece in self.id_to_piece:
                fh.write(piece + "\n")

    @classmethod
    def load(cls, path) -> "SubwordVocabulary":
        with open(path, encoding="utf-8") as fh:
            id_to_piece = [line.rstrip("\n") for line in fh]
        while id_to_piece and id_to_piece[-1] == "":
            id_to_piece.pop()
        return cls({p: i for i, p in enumerate(id_to_piece)}, id_to_piece)

    @classmethod
    def from_pieces(cls, pieces: list[str]) -> "SubwordVocabulary":
        return cls({p: i for i, p in enumerate(pieces)}, list(pieces))


def build_subword_vocab(word_sequences, max_words: int = 4000) -> SubwordVocabulary:
    """Construct a desk-scale WordPiece vocabulary from raw word sequences.

    Single characters are always included in both initial and continuation
    form, so greedy segmentation can never fail on seen characters; the most
    frequent whole words are added on top, capped at `max_words`.
    """
    word_counts = collections.Counter()
    chars = set()
    for words in word_sequences:
        for word in words:
            word_counts[word] += 1
            chars.update(word)
    if not word_counts:
        raise EmptyInputError("cannot build a subword vocabulary from empty input")
    pieces = [PAD_TOKEN, UNK_TOKEN, CLS_TOKEN, SEP_TOKEN, MASK_TOKEN]
    for ch in sorted(chars):
        pieces.append(ch)
        pieces.append(CONTINUATION_PREFIX + ch)
    seen = set(pieces)
    frequent = sorted(word_counts, key=lambda w: (-word_counts[w], w))
    for word in frequent[:max_words]:
        if word not in seen and len(word) > 1:
            pieces.append(word)
            seen.add(word)
    return SubwordVocabulary.from_pieces(pieces)


_MAX_CHARS_PER_WORD = 100


def wordpiece_tokenize(word: str, vocab: SubwordVocabulary) -> list[int]:
    """Greedy longest-match-first WordPiece segmentation of one word.

    Returns piece ids; the whole word falls back to [UNK] when any position
    cannot be matched.
    """
    if not word:
        raise ValueError("cannot tokenize an empty word")
    if len(word) > _MAX_CHARS_PER_WORD:
        return [vocab.unk_id]
    piece_ids = []
    start = 0
    while start < len(word):
        end = len(word)
        match = None
        while start < end:
            candidate = word[start:end]
            if start > 0:
                candidate = CONTINUATION_PREFIX + candidate
            piece_id = vocab.piece_to_id.get(candidate)
            if piece_id is not None:
                match = piece_id
                break
            end -= 1
        if match is None:
            return [vocab.unk_id]
        piece_ids.append(match)
        start = end
    return piece_ids


@dataclass
class SubwordSequence:
    """One encoder-ready chunk: piece ids plus word-boundary bookkeeping.

    `word_boundary_mask` is True on the last piece of each word; labels sit
    exactly there and are IGNORE everywhere else (including [CLS]/[SEP]).
    """

    piece_ids: list[int]
    word_boundary_mask: list[bool]
    labels_on_pieces: list[str]
    words: list[str] = field(default_factory=list)

    def __post_init__(self):
        if not (len(self.piece_ids) == len(self.word_boundary_mask) == len(self.labels_on_pieces)):
            raise ValueError("piece_ids, mask, and labels must have equal lengths")
        for mask, label in zip(self.word_boundary_mask, self.labels_on_pieces):
            if mask and label == IGNORE:
                raise ValueError("word-final piece must carry a real label")
            if not mask and label != IGNORE:
                raise ValueError("non-final piece must be IGNORE")

    @property
    def word_count(self) -> int:
        return sum(self.word_boundary_mask)


def align_labels_to_subwords(seq, vocab: SubwordVocabulary, max_len: int = 512) -> list[SubwordSequence]:
    """Segment a labeled word sequence into encoder chunks.

    Each word's label attaches to its last piece; [CLS]/[SEP] frame every
    chunk; sequences longer than max_len split at word boundaries, never
    mid-word. A single word whose pieces exceed max_len - 2 is an error.
    """
    if max_len < 3:
        raise ValueError("max_len must leave room for [CLS], [SEP], and a piece")
    budget = max_len - 2
    chunks: list[SubwordSequence] = []
    cur_pieces: list[list[int]] = []
    cur_words: list[str] = []
    cur_labels: list[str] = []
    cur_len = 0

    def close_chunk():
        nonlocal cur_pieces, cur_words, cur_labels, cur_len
        if not cur_pieces:
            return
        piece_ids = [vocab.cls_id]
        mask = [False]
        labels = [IGNORE]
        for pieces, label in zip(cur_pieces, cur_labels):
            piece_ids.extend(pieces)
            mask.extend([False] * (len(pieces) - 1) + [True])
            labels.extend([IGNORE] * (len(pieces) - 1) + [label])
        piece_ids.append(vocab.sep_id)
        mask.append(False)
        labels.append(IGNORE)
        chunks.append(SubwordSequence(piece_ids, mask, labels, list(cur_words)))
        cur_pieces, cur_words, cur_labels, cur_len = [], [], [], 0

    for word, label in zip(seq.words, seq.labels):
        pieces = wordpiece_tokenize(word, vocab)
        if len(pieces) > budget:
            raise ValueError(
                f"word {word!r} segments into {len(pieces)} pieces, exceeding max_len - 2 = {budget}"
            )
        if cur_len + len(pieces) > budget:
            close_chunk()
        cur_pieces.append(pieces)
        cur_words.append(word)
        cur_labels.append(label)
        cur_len += len(pieces)
    close_chunk()
    return chunks
