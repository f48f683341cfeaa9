from collections import Counter

import pytest
from hypothesis import given, settings, strategies as st

from minidapt.tokenizer import (CONT, SPECIALS, Vocabulary, base_symbols,
                                decode, encode, normalize_whitespace,
                                train_vocab)

N_SPECIALS = len(SPECIALS)


def brute_force_top_pair(words):
    """Independent pair-count oracle: most frequent adjacent symbol pair over
    whitespace words, chars as base symbols with ## continuations."""
    counts = Counter()
    for w in words:
        syms = [w[0]] + [CONT + c for c in w[1:]]
        for a, b in zip(syms, syms[1:]):
            counts[(a, b)] += 1
    best = max(counts.values())
    return min(p for p, c in counts.items() if c == best)


class TestTrainVocab:
    def test_merge_matches_pair_oracle(self):
        corpus = ["ab"] * 10
        pair = brute_force_top_pair(["ab"] * 10)
        assert pair == ("a", "##b")
        vocab = train_vocab(corpus, N_SPECIALS + 2 + 1)
        assert "ab" in vocab.tokens

    def test_exact_alphabet_budget_means_no_merges(self):
        corpus = ["abc abc", "cab"]
        alphabet = base_symbols(corpus)
        vocab = train_vocab(corpus, N_SPECIALS + len(alphabet))
        assert set(vocab.tokens) == set(SPECIALS) | alphabet

    def test_deterministic(self):
        corpus = ["the cat sat", "the hat", "a cat"]
        v1 = train_vocab(corpus, 40, seed=1)
        v2 = train_vocab(corpus, 40, seed=1)
        assert v1.to_json() == v2.to_json()

    def test_empty_corpus_errors(self):
        with pytest.raises(ValueError):
            train_vocab([], 50)
        with pytest.raises(ValueError):
            train_vocab(["   "], 50)

    def test_too_small_target_names_minimum(self):
        corpus = ["abc"]
        minimum = N_SPECIALS + len(base_symbols(corpus))
        with pytest.raises(ValueError, match=str(minimum)):
            train_vocab(corpus, minimum - 1)

    def test_stops_when_no_pair_repeats(self):
        # every word distinct and single-use: no pair reaches count 2
        corpus = ["ab cd ef"]
        vocab = train_vocab(corpus, 100)
        assert vocab.size == N_SPECIALS + len(base_symbols(corpus))


class TestVocabulary:
    def test_specials_present_and_distinct(self):
        vocab = train_vocab(["abc"], 40)
        ids = {vocab.pad_id, vocab.unk_id, vocab.cls_id, vocab.sep_id, vocab.mask_id}
        assert len(ids) == 5
        assert vocab.size == len(vocab.tokens)

    def test_duplicate_token_rejected(self):
        with pytest.raises(ValueError):
            Vocabulary(tokens=SPECIALS + ["a", "a"])

    def test_json_round_trip_bit_exact(self, tmp_path):
        vocab = train_vocab(["the cat sat on the mat"], 40)
        path = tmp_path / "vocab.json"
        vocab.save(path)
        reloaded = Vocabulary.load(path)
        assert reloaded.tokens == vocab.tokens
        assert reloaded.token_to_id == vocab.token_to_id
        reloaded.save(tmp_path / "again.json")
        assert (tmp_path / "again.json").read_bytes() == path.read_bytes()


class TestEncode:
    def test_empty_text(self):
        vocab = train_vocab(["ab"], 10)
        enc = encode(vocab, "")
        assert enc.ids == [] and enc.word_begin == []

    def test_unknown_character_is_single_unk(self):
        vocab = train_vocab(["ab"], 10)
        enc = encode(vocab, "z")
        assert enc.ids == [vocab.unk_id]
        assert enc.word_begin == [True]

    def test_word_begin_marks_word_starts(self):
        vocab = train_vocab(["abc abc abc"], N_SPECIALS + 3)  # char-level
        enc = encode(vocab, "abc abc")
        assert enc.word_begin == [True, False, False, True, False, False]

    def test_never_emits_structural_specials(self):
        vocab = train_vocab(["a b c"], 20)
        enc = encode(vocab, "[PAD] [CLS] a")
        structural = {vocab.pad_id, vocab.cls_id, vocab.sep_id, vocab.mask_id}
        assert not structural & set(enc.ids)

    def test_greedy_prefers_longest_match(self):
        corpus = ["abab"] * 5
        vocab = train_vocab(corpus, N_SPECIALS + len(base_symbols(corpus)) + 3)
        enc = encode(vocab, "abab")
        # merges give multi-char pieces, so fewer tokens than characters
        assert len(enc.ids) < 4
        assert decode(vocab, enc.ids) == "abab"


class TestDecode:
    def test_empty(self):
        vocab = train_vocab(["ab"], 10)
        assert decode(vocab, []) == ""

    def test_specials_dropped(self):
        vocab = train_vocab(["ab"], 10)
        assert decode(vocab, [vocab.cls_id, vocab.sep_id]) == ""

    def test_out_of_range_errors(self):
        vocab = train_vocab(["ab"], 10)
        with pytest.raises(ValueError):
            decode(vocab, [vocab.size])

    def test_round_trip_simple(self):
        vocab = train_vocab(["aa bb"], 12)
        assert decode(vocab, encode(vocab, "aa bb").ids) == "aa bb"


words = st.lists(st.text(alphabet="abcd", min_size=1, max_size=6),
                 min_size=1, max_size=8)


class TestProperties:
    @given(words)
    @settings(max_examples=50, deadline=None)
    def test_round_trip(self, ws):
        corpus = ["abcd dcba ab cd a b c d"]
        vocab = train_vocab(corpus, 40)
        text = normalize_whitespace(" ".join(ws))
        assert decode(vocab, encode(vocab, text).ids) == text

    @given(words)
    @settings(max_examples=50, deadline=None)
    def test_word_begin_reconstructs_whitespace_split(self, ws):
        vocab = train_vocab(["abcd abc ab a"], 40)
        text = normalize_whitespace(" ".join(ws))
        enc = encode(vocab, text)
        n_words = sum(enc.word_begin)
        assert n_words == len(text.split())
        # every continuation position belongs to the preceding word
        for k, begin in enumerate(enc.word_begin):
            if not begin:
                assert k > 0
