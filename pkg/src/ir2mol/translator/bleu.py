"""Corpus BLEU over token sequences.

Geometric mean of modified 1-4 gram precisions with add-one smoothing
on zero counts, times the brevity penalty. This variant is pinned here
so validation-based early stopping is reproducible.
"""

from __future__ import annotations

import math
from collections import Counter
from typing import List, Sequence, Tuple


class BleuError(ValueError):
    pass


def _ngrams(tokens: Sequence, n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def bleu(
    hypotheses: Sequence[Sequence],
    references: Sequence[Sequence],
    max_n: int = 4,
) -> float:
    """Corpus-level BLEU in [0, 1] for paired hypothesis/reference lists."""
    if len(hypotheses) != len(references):
        raise BleuError(
            f"{len(hypotheses)} hypotheses vs {len(references)} references"
        )
    if not hypotheses:
        raise BleuError("empty corpus")
    matches = [0] * max_n
    totals = [0] * max_n
    hyp_len = 0
    ref_len = 0
    for hyp, ref in zip(hypotheses, references):
        hyp = list(hyp)
        ref = list(ref)
        hyp_len += len(hyp)
        ref_len += len(ref)
        for n in range(1, max_n + 1):
            hyp_counts = _ngrams(hyp, n)
            ref_counts = _ngrams(ref, n)
            totals[n - 1] += sum(hyp_counts.values())
            matches[n - 1] += sum(
                min(c, ref_counts[g]) for g, c in hyp_counts.items()
            )
    if hyp_len == 0:
        return 0.0
    log_precision = 0.0
    for m, t in zip(matches, totals):
        if m == 0:
            m, t = m + 1, t + 1
        log_precision += math.log(m / t)
    log_precision /= max_n
    bp = 1.0 if hyp_len > ref_len else math.exp(1.0 - ref_len / hyp_len)
    return bp * math.exp(log_precision)
