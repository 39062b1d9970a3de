"""Tokenization, vocabularies, WordPiece, label alignment, punctuation."""

import numpy as np
import pytest

from phrasebreak.corpus import DatasetSplit, LabeledSequence
from phrasebreak.errors import EmptyInputError
from phrasebreak.textproc import (
    B,
    CLS_TOKEN,
    IGNORE,
    MASK_TOKEN,
    NB,
    PAD_TOKEN,
    SEP_TOKEN,
    UNK_TOKEN,
    SubwordVocabulary,
    Vocabulary,
    align_labels_to_subwords,
    build_subword_vocab,
    build_vocab,
    insert_breaks_as_commas,
    normalize_and_tokenize,
    strip_punctuation,
    wordpiece_tokenize,
)
from tests.conftest import WORD_STOCK, random_labeled_sequence


class TestNormalization:
    def test_strips_trailing_punctuation(self):
        assert normalize_and_tokenize("Once upon a time,") == ["once", "upon", "a", "time"]

    def test_dashes_split_words(self):
        assert normalize_and_tokenize("  Hello---world  ") == ["hello", "world"]

    def test_punctuation_only_rejected(self):
        with pytest.raises(EmptyInputError):
            normalize_and_tokenize("!!!")

    def test_internal_apostrophe_kept(self):
        assert normalize_and_tokenize("Don't stop") == ["don't", "stop"]

    def test_edge_apostrophes_stripped(self):
        assert normalize_and_tokenize("'tis 'quoted'") == ["tis", "quoted"]


class TestVocabulary:
    def _split(self, words_with_counts):
        sequences = []
        for word, count in words_with_counts.items():
            for _ in range(count):
                sequences.append(LabeledSequence(words=[word], labels=[B]))
        return DatasetSplit(name="train", sequences=sequences)

    def test_min_freq_threshold(self):
        vocab = build_vocab(self._split({"the": 5, "cat": 1}), min_freq=2)
        assert len(vocab) == 3
        assert vocab.word_to_id["the"] == 2
        assert vocab.encode(["cat"]) == [Vocabulary.UNK]

    def test_min_freq_one_keeps_all(self):
        vocab = build_vocab(self._split({"the": 5, "cat": 1}), min_freq=1)
        assert "cat" in vocab.word_to_id and "the" in vocab.word_to_id

    def test_deterministic_rebuild(self):
        split = self._split({"b": 3, "a": 3, "c": 1, "d": 2})
        first = build_vocab(split, min_freq=1)
        second = build_vocab(split, min_freq=1)
        assert first.word_to_id == second.word_to_id
        # equal frequency resolves lexicographically
        assert first.word_to_id["a"] < first.word_to_id["b"]

    def test_empty_split_rejected(self):
        with pytest.raises(EmptyInputError):
            build_vocab(DatasetSplit(name="train", sequences=[]), min_freq=1)

    def test_reserved_ids(self):
        vocab = build_vocab(self._split({"x": 2}), min_freq=1)
        assert vocab.id_to_word[0] == PAD_TOKEN
        assert vocab.id_to_word[1] == UNK_TOKEN

    def test_save_load_round_trip(self, tmp_path):
        vocab = build_vocab(self._split({"x": 2, "y": 3}), min_freq=1)
        vocab.save(tmp_path / "vocab.txt")
        loaded = Vocabulary.load(tmp_path / "vocab.txt")
        assert loaded.word_to_id == vocab.word_to_id


def _subword_vocab(extra):
    pieces = [PAD_TOKEN, UNK_TOKEN, CLS_TOKEN, SEP_TOKEN, MASK_TOKEN] + extra
    return SubwordVocabulary.from_pieces(pieces)


class TestWordPiece:
    def test_greedy_segmentation(self):
        vocab = _subword_vocab(["play", "##ing"])
        ids = wordpiece_tokenize("playing", vocab)
        assert [vocab.id_to_piece[i] for i in ids] == ["play", "##ing"]

    def test_whole_word_match(self):
        vocab = _subword_vocab(["play"])
        ids = wordpiece_tokenize("play", vocab)
        assert [vocab.id_to_piece[i] for i in ids] == ["play"]

    def test_unmatchable_becomes_unk(self):
        vocab = _subword_vocab(["play"])
        assert wordpiece_tokenize("xqz", vocab) == [vocab.unk_id]

    def test_longest_match_first(self):
        vocab = _subword_vocab(["un", "unhappy", "##happy", "##py", "##hap"])
        ids = wordpiece_tokenize("unhappy", vocab)
        assert [vocab.id_to_piece[i] for i in ids] == ["unhappy"]

    def test_concatenation_reproduces_word(self):
        rng = np.random.default_rng(21)
        corpus = [[w] for w in WORD_STOCK for _ in range(2)]
        vocab = build_subword_vocab(corpus, max_words=10)
        for _ in range(500):
            word = WORD_STOCK[int(rng.integers(len(WORD_STOCK)))]
            ids = wordpiece_tokenize(word, vocab)
            pieces = [vocab.id_to_piece[i] for i in ids]
            if pieces == [UNK_TOKEN]:
                continue
            rebuilt = pieces[0] + "".join(p[2:] for p in pieces[1:])
            assert rebuilt == word
            for piece in pieces[1:]:
                assert piece.startswith("##")

    def test_missing_special_token_rejected(self):
        with pytest.raises(ValueError, match="MASK"):
            SubwordVocabulary.from_pieces([PAD_TOKEN, UNK_TOKEN, CLS_TOKEN, SEP_TOKEN])

    def test_file_round_trip_line_number_ids(self, tmp_path):
        vocab = _subword_vocab(["play", "##ing"])
        vocab.save(tmp_path / "pieces.txt")
        loaded = SubwordVocabulary.load(tmp_path / "pieces.txt")
        assert loaded.piece_to_id == vocab.piece_to_id
        lines = (tmp_path / "pieces.txt").read_text().splitlines()
        assert lines[loaded.piece_to_id["##ing"]] == "##ing"


class TestLabelAlignment:
    def test_labels_on_last_piece(self):
        vocab = _subword_vocab(["play", "##ing", "outside"])
        seq = LabeledSequence(words=["playing", "outside"], labels=[B, NB])
        chunks = align_labels_to_subwords(seq, vocab, max_len=16)
        assert len(chunks) == 1
        chunk = chunks[0]
        pieces = [vocab.id_to_piece[i] for i in chunk.piece_ids]
        assert pieces == [CLS_TOKEN, "play", "##ing", "outside", SEP_TOKEN]
        assert chunk.labels_on_pieces == [IGNORE, IGNORE, B, NB, IGNORE]
        assert chunk.word_boundary_mask == [False, False, True, True, False]

    def test_single_word_single_label(self):
        vocab = _subword_vocab(["hi"])
        seq = LabeledSequence(words=["hi"], labels=[B])
        (chunk,) = align_labels_to_subwords(seq, vocab, max_len=8)
        assert sum(1 for l in chunk.labels_on_pieces if l != IGNORE) == 1

    def test_long_sequence_chunked_at_word_boundaries(self):
        vocab = _subword_vocab(["ab", "##cd"])
        words = ["abcd"] * 300  # two pieces each: 600 pieces total
        seq = LabeledSequence(words=words, labels=[NB] * 300)
        chunks = align_labels_to_subwords(seq, vocab, max_len=512)
        assert len(chunks) == 2
        assert sum(c.word_count for c in chunks) == 300
        for chunk in chunks:
            assert len(chunk.piece_ids) <= 512

    def test_oversized_word_rejected(self):
        vocab = _subword_vocab(["a", "##a"])
        seq = LabeledSequence(words=["a" * 10], labels=[B])
        with pytest.raises(ValueError, match="exceed"):
            align_labels_to_subwords(seq, vocab, max_len=6)

    def test_non_ignore_count_equals_word_count(self):
        rng = np.random.default_rng(9)
        corpus = [[w] for w in WORD_STOCK]
        vocab = build_subword_vocab(corpus, max_words=8)
        for _ in range(200):
            seq = random_labeled_sequence(rng, min_len=1, max_len=40)
            chunks = align_labels_to_subwords(seq, vocab, max_len=32)
            non_ignore = sum(
                1 for c in chunks for l in c.labels_on_pieces if l != IGNORE
            )
            assert non_ignore == len(seq.words)
            assert sum(c.word_count for c in chunks) == len(seq.words)


class TestPunctuationInsertion:
    def test_comma_after_break(self):
        assert insert_breaks_as_commas(["the", "cat", "sat"], [NB, B, NB]) == "the cat, sat."

    def test_all_no_break(self):
        assert insert_breaks_as_commas(["the", "cat", "sat"], [NB, NB, NB]) == "the cat sat."

    def test_length_mismatch_rejected(self):
        with pytest.raises(ValueError, match="mismatch"):
            insert_breaks_as_commas(["a", "b"], [B])

    def test_strip_finds_comma_boundaries(self):
        words, commas = strip_punctuation("the cat, sat.")
        assert words == ["the", "cat", "sat"]
        assert commas == {1}

    def test_strip_no_punctuation(self):
        words, commas = strip_punctuation("a b c")
        assert words == ["a", "b", "c"]
        assert commas == set()

    def test_comma_attached_to_previous_word_across_space(self):
        words, commas = strip_punctuation("the cat , sat")
        assert words == ["the", "cat", "sat"]
        assert commas == {1}

    def test_strip_insert_round_trip(self):
        rng = np.random.default_rng(17)
        for _ in range(500):
            seq = random_labeled_sequence(rng)
            text = insert_breaks_as_commas(seq.words, seq.labels)
            words, commas = strip_punctuation(text)
            assert words == seq.words
            assert commas == {i for i, l in enumerate(seq.labels[:-1]) if l == B}
