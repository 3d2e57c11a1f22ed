"""Token vocabulary for SMILES sequences.

Character-level tokenization with two-character element merging (Cl,
Br) so halogens stay atomic. Reserved control tokens occupy fixed
indices: BOS=0, EOS=1, PAD=2, UNK=3.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, List, Sequence, Tuple

BOS, EOS, PAD, UNK = "<bos>", "<eos>", "<pad>", "<unk>"
RESERVED = (BOS, EOS, PAD, UNK)
BOS_ID, EOS_ID, PAD_ID, UNK_ID = 0, 1, 2, 3

_TWO_CHAR = ("Cl", "Br")


class VocabularyError(ValueError):
    pass


def tokenize_smiles(s: str) -> List[str]:
    """Split a SMILES string into tokens, merging Cl and Br."""
    out = []
    i = 0
    while i < len(s):
        two = s[i : i + 2]
        if two in _TWO_CHAR:
            out.append(two)
            i += 2
        else:
            out.append(s[i])
            i += 1
    return out


@dataclass(frozen=True)
class TokenVocabulary:
    tokens: Tuple[str, ...]

    def __post_init__(self):
        if self.tokens[: len(RESERVED)] != RESERVED:
            raise VocabularyError(f"tokens must start with the reserved set {RESERVED}")
        if len(set(self.tokens)) != len(self.tokens):
            raise VocabularyError("duplicate tokens in vocabulary")
        object.__setattr__(self, "_index", {t: i for i, t in enumerate(self.tokens)})

    def __len__(self) -> int:
        return len(self.tokens)

    @classmethod
    def from_corpus(cls, smiles_corpus: Iterable[str]) -> "TokenVocabulary":
        seen = set()
        for s in smiles_corpus:
            seen.update(tokenize_smiles(s))
        return cls(tokens=RESERVED + tuple(sorted(seen)))

    def encode(self, s: str, add_controls: bool = True) -> List[int]:
        idx = self._index
        body = [idx.get(t, UNK_ID) for t in tokenize_smiles(s)]
        return [BOS_ID] + body + [EOS_ID] if add_controls else body

    def decode(self, ids: Sequence[int]) -> str:
        """Back to a string; control tokens are dropped, UNK renders as-is."""
        parts = []
        for i in ids:
            t = self.tokens[i]
            if t in (BOS, EOS, PAD):
                continue
            parts.append(t)
        return "".join(parts)

    def decode_tokens(self, ids: Sequence[int]) -> List[str]:
        return [self.tokens[i] for i in ids if self.tokens[i] not in (BOS, EOS, PAD)]
