"""ir2mol: molecular structure elucidation from infrared spectra.

Deterministic spectral tooling (preprocessing, peak/table assignment,
similarity retrieval), a trainable spectrum-to-SMILES translator with
beam search, a three-expert LLM pipeline over a pluggable backend, and
an evaluation harness with Top-K exact-match scoring.
"""

__version__ = "0.1.0"
