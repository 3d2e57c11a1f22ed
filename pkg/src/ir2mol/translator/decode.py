"""Beam-search decoding with greedy supplementation.

Beam search expands the k best prefixes per step by raw summed token
log-probability (no length normalization); hypotheses terminate at EOS
or the length cap. When deduplication by string leaves fewer than k
outputs, greedy decoding fills the rest: the plain greedy sequence
first, then variants that force the next-best token at the earliest
divergence position, so the output size is always exactly k.

The decoder works against a step interface (prefix token ids -> next
token log-probs), which keeps it testable against hand-built models
with fixed logits.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, List, Optional, Protocol, Sequence, Tuple

import numpy as np
import torch

from ..chem import SmilesParseError, parse
from ..spectra import Spectrum
from .model import TranslatorModel, spectrum_tensor
from .vocab import BOS_ID, EOS_ID, PAD_ID, TokenVocabulary


class DecodeError(ValueError):
    pass


class Stepper(Protocol):
    """Next-token log-probability oracle over prefixes (BOS included)."""

    vocab_size: int

    def log_probs(self, prefixes: Sequence[Sequence[int]]) -> np.ndarray: ...


class ModelStepper:
    """Stepper backed by a translator model and one encoded spectrum."""

    def __init__(self, model: TranslatorModel, spectrum: Spectrum):
        self.model = model
        self.vocab_size = model.config.vocab_size
        dtype = next(model.parameters()).dtype
        with torch.no_grad():
            self.memory = model.encode(spectrum_tensor(spectrum, dtype=dtype))

    def log_probs(self, prefixes: Sequence[Sequence[int]]) -> np.ndarray:
        width = max(len(p) for p in prefixes)
        tokens = torch.full((len(prefixes), width), PAD_ID, dtype=torch.long)
        for i, p in enumerate(prefixes):
            tokens[i, : len(p)] = torch.as_tensor(p, dtype=torch.long)
        with torch.no_grad():
            memory = self.memory.expand(len(prefixes), -1, -1)
            logits = self.model.decode(memory, tokens)
            rows = logits[torch.arange(len(prefixes)), [len(p) - 1 for p in prefixes]]
            return torch.log_softmax(rows.double(), dim=-1).numpy()


@dataclass(frozen=True)
class Candidate:
    smiles: str
    score: float
    origin: str  # "beam", "greedy-supplement", or "retrieval"
    parseable: bool


@dataclass(frozen=True)
class CandidateSet:
    candidates: Tuple[Candidate, ...]

    def __post_init__(self):
        beam_scores = [c.score for c in self.candidates if c.origin == "beam"]
        if any(a < b for a, b in zip(beam_scores, beam_scores[1:])):
            raise DecodeError("beam candidate scores must be non-increasing")

    def __len__(self) -> int:
        return len(self.candidates)

    def smiles(self) -> List[str]:
        return [c.smiles for c in self.candidates]

    def to_records(self) -> List[dict]:
        return [
            {
                "smiles": c.smiles,
                "score": c.score,
                "origin": c.origin,
                "parseable": c.parseable,
            }
            for c in self.candidates
        ]


def _is_parseable(smiles: str) -> bool:
    try:
        parse(smiles)
        return True
    except SmilesParseError:
        return False


def beam_search(
    stepper: Stepper,
    k: int,
    max_len: int,
    banned_ids: Sequence[int] = (BOS_ID, PAD_ID),
) -> List[Tuple[List[int], float]]:
    """Top-k token sequences (BOS/EOS stripped) with total log-probs."""
    if k < 1:
        raise DecodeError(f"beam width must be >= 1, got {k}")
    active: List[Tuple[List[int], float]] = [([BOS_ID], 0.0)]
    completed: List[Tuple[List[int], float]] = []
    for _ in range(max_len):
        if not active:
            break
        logp = stepper.log_probs([p for p, _ in active])
        scored = []
        for row, (prefix, score) in enumerate(active):
            for tok in range(stepper.vocab_size):
                if tok in banned_ids or logp[row, tok] == float("-inf"):
                    continue
                scored.append((score + float(logp[row, tok]), prefix, tok))
        scored.sort(key=lambda t: -t[0])
        active = []
        for total, prefix, tok in scored[:k]:
            seq = prefix + [tok]
            if tok == EOS_ID:
                completed.append((seq[1:-1], total))
            else:
                active.append((seq, total))
    completed.extend((seq[1:], score) for seq, score in active)
    completed.sort(key=lambda t: -t[1])
    return completed[:k]


def greedy_decode(
    stepper: Stepper,
    max_len: int,
    forced: Sequence[int] = (),
    banned_ids: Sequence[int] = (BOS_ID, PAD_ID),
) -> Tuple[List[int], float]:
    """Argmax decoding; `forced` pins the first tokens regardless of logits."""
    prefix = [BOS_ID]
    score = 0.0
    for step in range(max_len):
        logp = stepper.log_probs([prefix])[0]
        if step < len(forced):
            tok = forced[step]
        else:
            order = np.argsort(-logp, kind="stable")
            tok = next(int(t) for t in order if int(t) not in banned_ids)
        score += float(logp[tok])
        if tok == EOS_ID:
            return prefix[1:], score
        prefix.append(tok)
    return prefix[1:], score


def _nth_best(logp: np.ndarray, rank: int, banned_ids) -> Optional[int]:
    order = [int(t) for t in np.argsort(-logp, kind="stable") if int(t) not in banned_ids]
    return order[rank] if rank < len(order) else None


def beam_decode(
    model_or_stepper,
    vocab: TokenVocabulary,
    k: Optional[int] = None,
    max_len: Optional[int] = None,
    spectrum: Optional[Spectrum] = None,
) -> CandidateSet:
    """Decode exactly k candidate strings for one spectrum.

    Beam outputs are deduplicated by rendered string; if fewer than k
    remain, greedy supplements are appended (flagged by origin) until
    the size contract holds.
    """
    if isinstance(model_or_stepper, TranslatorModel):
        if spectrum is None:
            raise DecodeError("a spectrum is required when passing a model")
        cfg = model_or_stepper.config
        k = cfg.beam_width if k is None else k
        max_len = cfg.max_target_len if max_len is None else max_len
        stepper: Stepper = ModelStepper(model_or_stepper, spectrum)
    else:
        stepper = model_or_stepper
        if k is None or max_len is None:
            raise DecodeError("k and max_len are required when passing a stepper")
    if k < 1:
        raise DecodeError(f"k must be >= 1, got {k}")

    results: List[Candidate] = []
    seen = set()
    for seq, score in beam_search(stepper, k, max_len):
        text = vocab.decode([*seq])
        if text in seen:
            continue
        seen.add(text)
        results.append(Candidate(text, score, "beam", _is_parseable(text)))

    # Greedy supplementation: the plain greedy sequence first, then
    # variants forcing the rank-r token at divergence position p of the
    # greedy base (walking r, then p) until the size contract holds.
    if len(results) < k:

        def consider(seq, score):
            text = vocab.decode(seq)
            if text in seen:
                return
            seen.add(text)
            results.append(
                Candidate(text, score, "greedy-supplement", _is_parseable(text))
            )

        base, base_score = greedy_decode(stepper, max_len)
        consider(base, base_score)
        pos, rank = 0, 1
        horizon = max(1, len(base))
        while len(results) < k and pos < horizon:
            logp = stepper.log_probs([[BOS_ID] + base[:pos]])[0]
            tok = _nth_best(logp, rank, (BOS_ID, PAD_ID))
            if tok is None:
                pos, rank = pos + 1, 1
                continue
            seq, score = greedy_decode(stepper, max_len, forced=base[:pos] + [tok])
            consider(seq, score)
            rank += 1
            if rank >= stepper.vocab_size:
                pos, rank = pos + 1, 1
        while len(results) < k:
            # Token space exhausted (degenerate vocabularies): repeat the
            # weakest entry so the output size stays fixed.
            if results:
                last = results[-1]
                filler = Candidate(last.smiles, last.score, "greedy-supplement",
                                   last.parseable)
            else:
                filler = Candidate("", float("-inf"), "greedy-supplement", False)
            results.append(filler)
    return CandidateSet(candidates=tuple(results[:k]))
