"""The three expert agents and the single-agent variant.

Each run_* call renders one prompt, dispatches it through the backend,
and parses the reply leniently: pipe-delimited analysis lines for the
TI and Ret experts, numbered SMILES lines for the elucidation experts.
Unparseable structure never raises here; it degrades to empty
structured output (with the raw text kept) or to candidate back-fill.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

from ..chem import SmilesParseError, canonical_smiles
from .backend import BackendError, LlmBackend, LlmResponse, estimate_tokens, prompt_digest
from .prompts import (
    ChemicalInfo,
    PromptTemplate,
    format_candidates,
    format_hits,
    format_interpretations,
)

CONFIDENCE_LEVELS = ("high", "medium", "low")


class ExpertError(ValueError):
    pass


@dataclass(frozen=True)
class AgentCall:
    """Audit record of one backend request."""

    agent: str
    system: str
    user: str
    digest: str
    response: str
    usage: Optional[Tuple[int, int]]
    usage_estimated: bool
    failed: bool = False
    error: Optional[str] = None

    def to_record(self) -> dict:
        return {
            "agent": self.agent,
            "digest": self.digest,
            "response": self.response,
            "usage": list(self.usage) if self.usage else None,
            "usage_estimated": self.usage_estimated,
            "failed": self.failed,
            "error": self.error,
        }


def _dispatch(backend: LlmBackend, agent: str, system: str, user: str) -> AgentCall:
    digest = prompt_digest(system, user)
    try:
        resp = backend.complete(system, user)
    except BackendError as exc:
        return AgentCall(
            agent=agent, system=system, user=user, digest=digest,
            response="", usage=None, usage_estimated=False,
            failed=True, error=str(exc),
        )
    if resp.usage is not None:
        usage, estimated = resp.usage, False
    else:
        usage = (estimate_tokens(system) + estimate_tokens(user),
                 estimate_tokens(resp.content))
        estimated = True
    return AgentCall(
        agent=agent, system=system, user=user, digest=digest,
        response=resp.content, usage=usage, usage_estimated=estimated,
    )


@dataclass(frozen=True)
class ExpertAnalysis:
    expert: str  # "TI" | "Ret"
    text: str
    structured: tuple
    call: AgentCall
    notes: Tuple[str, ...] = ()

    @property
    def failed(self) -> bool:
        return self.call.failed

    def to_record(self) -> dict:
        return {
            "expert": self.expert,
            "text": self.text,
            "structured": [list(t) for t in self.structured],
            "notes": list(self.notes),
            "call": self.call.to_record(),
        }


def parse_ti_output(text: str) -> Tuple[tuple, Tuple[str, ...]]:
    """(substructure, confidence, rationale) triples from pipe lines."""
    triples = []
    for line in text.splitlines():
        parts = [p.strip() for p in line.split("|")]
        if len(parts) != 3:
            continue
        sub, conf, rationale = parts
        if sub and conf.lower() in CONFIDENCE_LEVELS:
            triples.append((sub, conf.lower(), rationale))
    notes = () if triples else ("no structured TI lines parsed",)
    return tuple(triples), notes


def parse_ret_output(text: str) -> Tuple[tuple, Tuple[str, ...]]:
    """(motif, support note) pairs from pipe lines."""
    pairs = []
    for line in text.splitlines():
        parts = [p.strip() for p in line.split("|")]
        if len(parts) != 2:
            continue
        motif, note = parts
        if motif:
            pairs.append((motif, note))
    notes = () if pairs else ("no structured Ret lines parsed",)
    return tuple(pairs), notes


_NUMBERED_LINE = re.compile(r"^\s*(\d+)[.)]\s*(\S+)")
_MARKUP = re.compile(r"[`*_\"']")


def parse_se_output(text: str, candidates: Sequence[str], k: int) -> Tuple[List[str], Tuple[str, ...]]:
    """Recover exactly k ranked SMILES from the reply.

    Numbered lines are taken in order (markdown stripped); bare
    single-token lines are the fallback when no numbered line exists.
    Duplicates collapse by canonical form; missing entries back-fill
    from the candidate list in order, then by repetition if the
    candidate pool itself cannot fill k.
    """
    notes: List[str] = []
    raw: List[str] = []
    for line in text.splitlines():
        m = _NUMBERED_LINE.match(_MARKUP.sub("", line))
        if m:
            raw.append(m.group(2))
    if not raw:
        for line in text.splitlines():
            token = _MARKUP.sub("", line).strip()
            if token and " " not in token:
                raw.append(token)
        if raw:
            notes.append("no numbered lines; used bare lines")

    def key(smiles: str) -> str:
        try:
            return canonical_smiles(smiles)
        except SmilesParseError:
            return "\x00unparseable:" + smiles

    ranked: List[str] = []
    seen = set()
    for s in raw:
        ks = key(s)
        if ks in seen:
            notes.append(f"duplicate dropped: {s}")
            continue
        seen.add(ks)
        ranked.append(s)
        if len(ranked) == k:
            break
    if len(ranked) < k:
        for s in candidates:
            if len(ranked) == k:
                break
            ks = key(s)
            if ks in seen:
                continue
            seen.add(ks)
            ranked.append(s)
            notes.append(f"back-filled from candidates: {s}")
    while len(ranked) < k and candidates:
        ranked.append(candidates[len(ranked) % len(candidates)])
        notes.append("padded by candidate repetition")
    while len(ranked) < k:
        ranked.append("")
        notes.append("padded with empty entry")
    return ranked[:k], tuple(notes)


def run_ti_expert(
    backend: LlmBackend,
    template: PromptTemplate,
    assignments,
    candidates: Sequence[str],
    info: Optional[ChemicalInfo] = None,
) -> ExpertAnalysis:
    if not candidates:
        raise ExpertError("TI expert needs a nonempty candidate set")
    system, user = template.render(
        peak_interpretations=format_interpretations(assignments),
        candidates=format_candidates(candidates),
        chemical_info=info,
    )
    call = _dispatch(backend, "TI", system, user)
    if call.failed:
        return ExpertAnalysis(expert="TI", text="", structured=(), call=call,
                              notes=("backend failure",))
    structured, notes = parse_ti_output(call.response)
    return ExpertAnalysis(expert="TI", text=call.response, structured=structured,
                          call=call, notes=notes)


def run_ret_expert(
    backend: LlmBackend,
    template: PromptTemplate,
    hits,
    info: Optional[ChemicalInfo] = None,
) -> ExpertAnalysis:
    hits = list(hits)
    if not hits:
        raise ExpertError("Ret expert needs a nonempty hit list")
    sims = [h.similarity for h in hits]
    if any(a < b for a, b in zip(sims, sims[1:])):
        raise ExpertError("retrieval hits must be sorted by similarity descending")
    system, user = template.render(
        retrieval_hits=format_hits(hits),
        chemical_info=info,
    )
    call = _dispatch(backend, "Ret", system, user)
    if call.failed:
        return ExpertAnalysis(expert="Ret", text="", structured=(), call=call,
                              notes=("backend failure",))
    structured, notes = parse_ret_output(call.response)
    return ExpertAnalysis(expert="Ret", text=call.response, structured=structured,
                          call=call, notes=notes)


ANALYSIS_ABSENT = "(not available)"


@dataclass(frozen=True)
class ElucidationResult:
    """Final ranked structures plus the full audit trail."""

    ranked: Tuple[str, ...]
    raw_text: str
    fallback: bool
    calls: Tuple[AgentCall, ...]
    candidates: Tuple[str, ...]
    ti_analysis: Optional[ExpertAnalysis] = None
    ret_analysis: Optional[ExpertAnalysis] = None
    notes: Tuple[str, ...] = ()
    mode: str = "multi"

    def to_record(self) -> dict:
        return {
            "ranked": list(self.ranked),
            "raw_text": self.raw_text,
            "fallback": self.fallback,
            "mode": self.mode,
            "candidates": list(self.candidates),
            "ti_analysis": self.ti_analysis.to_record() if self.ti_analysis else None,
            "ret_analysis": self.ret_analysis.to_record() if self.ret_analysis else None,
            "calls": [c.to_record() for c in self.calls],
            "notes": list(self.notes),
        }


def _ranked_from_candidates(candidates: Sequence[str], k: int) -> List[str]:
    ranked = list(candidates[:k])
    while len(ranked) < k and candidates:
        ranked.append(candidates[len(ranked) % len(candidates)])
    return ranked


def run_se_expert(
    backend: LlmBackend,
    template: PromptTemplate,
    candidates: Sequence[str],
    ti: Optional[ExpertAnalysis],
    ret: Optional[ExpertAnalysis],
    k: int,
    info: Optional[ChemicalInfo] = None,
    mode: str = "multi",
) -> ElucidationResult:
    if k < 1:
        raise ExpertError(f"k must be >= 1, got {k}")
    ti_text = ti.text if ti is not None and not ti.failed and ti.text else ANALYSIS_ABSENT
    ret_text = ret.text if ret is not None and not ret.failed and ret.text else ANALYSIS_ABSENT
    system, user = template.render(
        candidates=format_candidates(candidates),
        ti_analysis=ti_text,
        ret_analysis=ret_text,
        k=str(k),
        chemical_info=info,
    )
    call = _dispatch(backend, "SE", system, user)
    expert_calls = tuple(
        a.call for a in (ti, ret) if a is not None
    ) + (call,)
    if call.failed:
        return ElucidationResult(
            ranked=tuple(_ranked_from_candidates(candidates, k)),
            raw_text="",
            fallback=True,
            calls=expert_calls,
            candidates=tuple(candidates),
            ti_analysis=ti,
            ret_analysis=ret,
            notes=("SE backend failure; candidate order used",),
            mode=mode,
        )
    ranked, notes = parse_se_output(call.response, candidates, k)
    return ElucidationResult(
        ranked=tuple(ranked),
        raw_text=call.response,
        fallback=False,
        calls=expert_calls,
        candidates=tuple(candidates),
        ti_analysis=ti,
        ret_analysis=ret,
        notes=notes,
        mode=mode,
    )


def run_single_agent(
    backend: LlmBackend,
    template: PromptTemplate,
    assignments,
    hits,
    candidates: Sequence[str],
    k: int,
    info: Optional[ChemicalInfo] = None,
) -> ElucidationResult:
    if k < 1:
        raise ExpertError(f"k must be >= 1, got {k}")
    system, user = template.render(
        peak_interpretations=format_interpretations(assignments),
        retrieval_hits=format_hits(hits),
        candidates=format_candidates(candidates),
        k=str(k),
        chemical_info=info,
    )
    call = _dispatch(backend, "Single", system, user)
    if call.failed:
        return ElucidationResult(
            ranked=tuple(_ranked_from_candidates(candidates, k)),
            raw_text="",
            fallback=True,
            calls=(call,),
            candidates=tuple(candidates),
            notes=("single-agent backend failure; candidate order used",),
            mode="single",
        )
    ranked, notes = parse_se_output(call.response, candidates, k)
    return ElucidationResult(
        ranked=tuple(ranked),
        raw_text=call.response,
        fallback=False,
        calls=(call,),
        candidates=tuple(candidates),
        notes=notes,
        mode="single",
    )
