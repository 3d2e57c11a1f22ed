import math

import pytest

from ir2mol.translator.bleu import BleuError, bleu


class TestBleu:
    def test_identical_is_one(self):
        assert bleu([["C", "C", "O"]], [["C", "C", "O"]]) == 1.0

    def test_disjoint_closed_form(self):
        # all zero counts: p_n = 1/(h_n + 1), h_n = L - n + 1, equal lengths
        L = 40
        hyp = [f"x{i}" for i in range(L)]
        ref = [f"y{i}" for i in range(L)]
        got = bleu([hyp], [ref])
        expected = math.exp(
            sum(math.log(1.0 / (L - n + 1 + 1)) for n in range(1, 5)) / 4.0
        )
        assert got == pytest.approx(expected, rel=1e-12)
        assert got < 0.05

    def test_half_unigrams_hand_computed(self):
        # 4 tokens, 2 matching unigrams, no higher n-gram matches, equal length
        hyp = ["A", "B", "x", "y"]
        ref = ["A", "B", "c", "d"]
        p1 = 2 / 4
        p2 = 1 / (3 + 1)  # one bigram (A,B) matches? it does: count 1 of 3
        # recompute: bigrams of hyp: AB, Bx, xy; AB matches -> p2 = 1/3
        p2 = 1 / 3
        p3 = 1 / (2 + 1)  # zero matches among 2 trigrams -> smoothed
        p4 = 1 / (1 + 1)  # zero matches among 1 fourgram -> smoothed
        expected = math.exp((math.log(p1) + math.log(p2) + math.log(p3) + math.log(p4)) / 4)
        assert bleu([hyp], [ref]) == pytest.approx(expected, rel=1e-12)

    def test_brevity_penalty(self):
        # hypothesis half as long as the reference
        hyp = ["A", "B"]
        ref = ["A", "B", "C", "D"]
        got = bleu([hyp], [ref])
        assert got <= math.exp(1 - 4 / 2) + 1e-9

    def test_longer_hypothesis_no_penalty(self):
        full = bleu([["A", "B", "C", "D", "E"]], [["A", "B", "C", "D"]])
        assert full > 0

    def test_corpus_level_pools_counts(self):
        hyps = [["A", "B"], ["C", "D"]]
        refs = [["A", "B"], ["C", "D"]]
        assert bleu(hyps, refs) == 1.0

    def test_bounds(self):
        assert 0.0 <= bleu([["A"]], [["B"]]) <= 1.0

    def test_empty_corpus_rejected(self):
        with pytest.raises(BleuError, match="empty"):
            bleu([], [])

    def test_mismatched_lengths_rejected(self):
        with pytest.raises(BleuError):
            bleu([["A"]], [["A"], ["B"]])

    def test_empty_hypotheses_do_not_crash(self):
        assert bleu([[]], [["A", "B"]]) == 0.0
