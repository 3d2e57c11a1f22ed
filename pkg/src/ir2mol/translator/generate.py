"""Candidate-generator interface: neural translator or retrieval fallback.

Both produce a fixed-size CandidateSet for a spectrum, so the expert
pipeline can run (and be tested) without a trained model.
"""

from __future__ import annotations

from typing import Optional

from ..retrieval import SpectraDatabase, retrieve
from ..spectra import Spectrum
from .decode import Candidate, CandidateSet, DecodeError, _is_parseable, beam_decode
from .model import TranslatorModel
from .vocab import TokenVocabulary


class CandidateGenerator:
    def generate(self, spectrum: Spectrum, k: int) -> CandidateSet:
        raise NotImplementedError


class NeuralCandidateGenerator(CandidateGenerator):
    """Beam decoding; a beam wider than k keeps the best k of its output."""

    def __init__(self, model: TranslatorModel, vocab: TokenVocabulary,
                 max_len: Optional[int] = None, beam_width: Optional[int] = None):
        self.model = model
        self.vocab = vocab
        self.max_len = max_len or model.config.max_target_len
        self.beam_width = beam_width

    def generate(self, spectrum: Spectrum, k: int) -> CandidateSet:
        width = max(k, self.beam_width or k)
        decoded = beam_decode(self.model, self.vocab, k=width, max_len=self.max_len,
                              spectrum=spectrum)
        return CandidateSet(candidates=decoded.candidates[:k])


class RetrievalCandidateGenerator(CandidateGenerator):
    """Top-k retrieved SMILES in similarity order, scored by similarity."""

    def __init__(self, db: SpectraDatabase, exclude_query_id: bool = False):
        self.db = db
        self.exclude_query_id = exclude_query_id

    def generate(self, spectrum: Spectrum, k: int) -> CandidateSet:
        if k < 1:
            raise DecodeError(f"k must be >= 1, got {k}")
        db = self.db
        if self.exclude_query_id and spectrum.id:
            db = db.exclude_self(spectrum.id)
        hits = retrieve(db, spectrum, n=k)
        cands = [
            Candidate(h.smiles, h.similarity, "retrieval", _is_parseable(h.smiles))
            for h in hits
        ]
        while len(cands) < k and cands:
            cands.append(cands[-1])  # databases smaller than k: repeat weakest
        return CandidateSet(candidates=tuple(cands))
