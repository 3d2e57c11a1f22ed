"""Prompt templates for the expert agents.

Rendering is byte-deterministic: fixed skeletons, named slots, and
machine-readable response conventions (pipe-separated analysis lines,
numbered SMILES lists) so downstream parsing is testable. Auxiliary
chemical information is injected as exactly one sentence appended to
the otherwise unchanged prompt; the {chemical_info} slot is therefore
always the final element of every skeleton.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

from ..chem import atom_types as derive_atom_types
from ..chem import carbon_count as derive_carbon_count
from ..chem import parse
from ..chem import scaffold as derive_scaffold


class PromptError(ValueError):
    pass


CHEMICAL_INFO_KINDS = ("none", "atom_types", "scaffold", "carbon_count")

_INFO_SENTENCES = {
    "atom_types": "The molecule contains only these atom types: {payload}.",
    "scaffold": "The molecule has the scaffold: {payload}.",
    "carbon_count": "The molecule contains exactly {payload} carbon atoms.",
}


@dataclass(frozen=True)
class ChemicalInfo:
    kind: str = "none"
    payload: str = ""

    def __post_init__(self):
        if self.kind not in CHEMICAL_INFO_KINDS:
            raise PromptError(f"unknown chemical info kind {self.kind!r}")
        if self.kind != "none" and not self.payload:
            raise PromptError(f"chemical info kind {self.kind!r} needs a payload")
        if self.kind == "none" and self.payload:
            raise PromptError("kind 'none' carries no payload")

    def sentence(self) -> str:
        if self.kind == "none":
            return ""
        return _INFO_SENTENCES[self.kind].format(payload=self.payload)


NO_INFO = ChemicalInfo()


def derive_chemical_info(kind: str, smiles: str) -> ChemicalInfo:
    """Compute the auxiliary-information payload from a known structure.

    An acyclic molecule has no scaffold; that degrades to kind none.
    """
    if kind == "none":
        return NO_INFO
    if kind not in CHEMICAL_INFO_KINDS:
        raise PromptError(f"unknown chemical info kind {kind!r}")
    g = parse(smiles)
    if kind == "atom_types":
        return ChemicalInfo(kind=kind, payload=", ".join(derive_atom_types(g)))
    if kind == "carbon_count":
        return ChemicalInfo(kind=kind, payload=str(derive_carbon_count(g)))
    core = derive_scaffold(g)
    if core is None:
        return NO_INFO
    return ChemicalInfo(kind=kind, payload=core)


@dataclass(frozen=True)
class PromptTemplate:
    id: str  # TI | Ret | SE | Single
    system: str
    skeleton: str
    slots: Tuple[str, ...]

    def render(self, *, chemical_info: Optional[ChemicalInfo] = None, **values) -> Tuple[str, str]:
        """Fill every slot; returns (system, user) prompt strings."""
        info = chemical_info or NO_INFO
        values = dict(values)
        values["chemical_info"] = "" if info.kind == "none" else "\n" + info.sentence()
        missing = [s for s in self.slots if s not in values]
        if missing:
            raise PromptError(f"template {self.id}: unfilled slots {missing}")
        extra = [s for s in values if s not in self.slots]
        if extra:
            raise PromptError(f"template {self.id}: unknown slots {extra}")
        return self.system, self.skeleton.format(**values)


def format_candidates(smiles: Sequence[str]) -> str:
    return "\n".join(f"{i}. {s}" for i, s in enumerate(smiles, start=1))


def format_hits(hits) -> str:
    """Retrieved structures as 'SMILES : similarity' with 4-decimal scores."""
    return "\n".join(f"{h.smiles} : {h.similarity:.4f}" for h in hits)


def format_interpretations(assignments) -> str:
    lines: List[str] = []
    for a in assignments:
        lines.extend(a.interpretation)
    return "\n".join(lines) if lines else "(no peaks detected)"


_TI_SYSTEM = (
    "You are an infrared spectroscopy expert who identifies molecular "
    "substructures from absorption-table evidence."
)
_TI_SKELETON = """Peak interpretations derived from the IR absorption table:
{peak_interpretations}

Candidate structures proposed for this spectrum:
{candidates}

Compare the table interpretations with the candidate structures and identify the substructures that are likely present in the molecule. Weigh a substructure higher when the table evidence and the candidates agree on it. Reply with one line per substructure, in exactly this format:
SUBSTRUCTURE | CONFIDENCE | RATIONALE
where CONFIDENCE is one of high, medium, low. Keep the reply under {output_budget} tokens.{chemical_info}"""

_RET_SYSTEM = (
    "You are an infrared spectroscopy expert who infers global structural "
    "motifs from reference spectra retrieved by similarity."
)
_RET_SKELETON = """Structures of reference spectra similar to the target spectrum, with their cosine similarities (higher means closer):
{retrieval_hits}

Identify the structural motifs shared among these reference structures, assigning higher weight to structures with higher similarity. Reply with one line per motif, in exactly this format:
MOTIF | SUPPORT
where SUPPORT briefly states how strongly and in which references the motif appears. Keep the reply under {output_budget} tokens.{chemical_info}"""

_SE_SYSTEM = (
    "You are a structure-elucidation expert who determines molecular "
    "structures from infrared evidence."
)
_SE_SKELETON = """An unknown compound is being elucidated from its IR spectrum.

Candidate structures from the spectrum-to-structure translator:
{candidates}

Local substructure analysis (from the IR absorption table):
{ti_analysis}

Global motif analysis (from retrieved similar spectra):
{ret_analysis}

Integrate both analyses with the candidate list and rank the {k} most plausible molecular structures, most plausible first. You may correct candidate structures when the analyses clearly support a modification. Reply with exactly {k} lines, each in the format:
1. SMILES{chemical_info}"""

_SINGLE_SYSTEM = (
    "You are a spectroscopy expert who performs complete molecular structure "
    "elucidation from infrared evidence in one pass."
)
_SINGLE_SKELETON = """An unknown compound is being elucidated from its IR spectrum.

Peak interpretations derived from the IR absorption table:
{peak_interpretations}

Structures of reference spectra similar to the target spectrum, with their cosine similarities (higher means closer):
{retrieval_hits}

Candidate structures from the spectrum-to-structure translator:
{candidates}

Analyze the local substructure evidence and the global motifs yourself, then rank the {k} most plausible molecular structures, most plausible first. Reply with exactly {k} lines, each in the format:
1. SMILES{chemical_info}"""


def build_templates(output_budget: int = 300) -> Dict[str, PromptTemplate]:
    """The four fixed templates; the expert output budget is baked in."""
    if output_budget < 1:
        raise PromptError("output budget must be positive")
    budget = str(output_budget)
    return {
        "TI": PromptTemplate(
            id="TI",
            system=_TI_SYSTEM,
            skeleton=_TI_SKELETON.replace("{output_budget}", budget),
            slots=("peak_interpretations", "candidates", "chemical_info"),
        ),
        "Ret": PromptTemplate(
            id="Ret",
            system=_RET_SYSTEM,
            skeleton=_RET_SKELETON.replace("{output_budget}", budget),
            slots=("retrieval_hits", "chemical_info"),
        ),
        "SE": PromptTemplate(
            id="SE",
            system=_SE_SYSTEM,
            skeleton=_SE_SKELETON,
            slots=("candidates", "ti_analysis", "ret_analysis", "k", "chemical_info"),
        ),
        "Single": PromptTemplate(
            id="Single",
            system=_SINGLE_SYSTEM,
            skeleton=_SINGLE_SKELETON,
            slots=("peak_interpretations", "retrieval_hits", "candidates", "k", "chemical_info"),
        ),
    }
