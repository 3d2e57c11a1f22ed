"""End-to-end elucidation pipeline and cost accounting.

For one spectrum: generate candidates, run the table-interpretation and
retrieval experts (independent of each other), then the structure-
elucidation expert over their analyses. Ablation modes skip experts;
the single-agent mode folds everything into one call; no-experts
returns the generator candidates untouched with zero backend traffic.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence, Tuple

from ..peaks import AbsorptionBand, assign, find_peaks
from ..retrieval import SpectraDatabase, retrieve
from ..spectra import Spectrum
from ..translator.generate import CandidateGenerator
from .backend import LlmBackend
from .experts import (
    AgentCall,
    ElucidationResult,
    ExpertAnalysis,
    _ranked_from_candidates,
    run_ret_expert,
    run_se_expert,
    run_single_agent,
    run_ti_expert,
)
from .prompts import ChemicalInfo, build_templates, derive_chemical_info

MODES = ("multi", "ti-only", "ret-only", "single", "no-experts")


class PipelineError(ValueError):
    pass


@dataclass(frozen=True)
class PipelineConfig:
    mode: str = "multi"
    num_candidates: int = 3
    ranked_size: Optional[int] = None  # defaults to num_candidates
    n_retrieve: int = 10
    peak_height: float = 1.0
    peak_distance: int = 50
    chemical_info: str = "none"
    exclude_query_from_db: bool = False
    output_budget: int = 300
    expert_order: Tuple[str, str] = ("TI", "Ret")

    def __post_init__(self):
        if self.mode not in MODES:
            raise PipelineError(f"unknown mode {self.mode!r}")
        if self.num_candidates < 1 or self.n_retrieve < 1:
            raise PipelineError("candidate and retrieval counts must be positive")
        if sorted(self.expert_order) != ["Ret", "TI"]:
            raise PipelineError("expert_order must be a permutation of (TI, Ret)")

    @property
    def k(self) -> int:
        return self.ranked_size if self.ranked_size is not None else self.num_candidates

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "num_candidates": self.num_candidates,
            "ranked_size": self.ranked_size,
            "n_retrieve": self.n_retrieve,
            "peak_height": self.peak_height,
            "peak_distance": self.peak_distance,
            "chemical_info": self.chemical_info,
            "exclude_query_from_db": self.exclude_query_from_db,
            "output_budget": self.output_budget,
        }


class Pipeline:
    """Bundles the artifacts one elucidation run needs."""

    def __init__(
        self,
        generator: CandidateGenerator,
        table: Sequence[AbsorptionBand],
        db: SpectraDatabase,
        backend: Optional[LlmBackend],
        config: PipelineConfig,
    ):
        if config.mode != "no-experts" and backend is None:
            raise PipelineError(f"mode {config.mode!r} needs a backend")
        self.generator = generator
        self.table = list(table)
        self.db = db
        self.backend = backend
        self.config = config
        self.templates = build_templates(output_budget=config.output_budget)

    def _info(self, spectrum: Spectrum) -> Optional[ChemicalInfo]:
        kind = self.config.chemical_info
        if kind == "none":
            return None
        if spectrum.smiles is None:
            raise PipelineError(
                f"chemical info {kind!r} needs the ground-truth SMILES on the spectrum"
            )
        return derive_chemical_info(kind, spectrum.smiles)

    def elucidate(self, spectrum: Spectrum) -> ElucidationResult:
        cfg = self.config
        candidates = self.generator.generate(spectrum, cfg.num_candidates).smiles()
        if cfg.mode == "no-experts":
            return ElucidationResult(
                ranked=tuple(_ranked_from_candidates(candidates, cfg.k)),
                raw_text="",
                fallback=False,
                calls=(),
                candidates=tuple(candidates),
                notes=("no-experts mode: generator order",),
                mode="no-experts",
            )

        info = self._info(spectrum)
        db = self.db
        if cfg.exclude_query_from_db and spectrum.id:
            db = db.exclude_self(spectrum.id)
        assignments = assign(
            find_peaks(spectrum, height=cfg.peak_height, distance=cfg.peak_distance),
            self.table,
        )
        hits = retrieve(db, spectrum, n=cfg.n_retrieve)

        if cfg.mode == "single":
            return run_single_agent(
                self.backend, self.templates["Single"], assignments, hits,
                candidates, cfg.k, info,
            )

        ti: Optional[ExpertAnalysis] = None
        ret: Optional[ExpertAnalysis] = None
        for which in cfg.expert_order:
            if which == "TI" and cfg.mode in ("multi", "ti-only"):
                ti = run_ti_expert(
                    self.backend, self.templates["TI"], assignments, candidates, info
                )
            if which == "Ret" and cfg.mode in ("multi", "ret-only"):
                ret = run_ret_expert(
                    self.backend, self.templates["Ret"], hits, info
                )
        return run_se_expert(
            self.backend, self.templates["SE"], candidates, ti, ret,
            cfg.k, info, mode=cfg.mode,
        )


@dataclass(frozen=True)
class AgentCost:
    input_tokens: int = 0
    output_tokens: int = 0
    calls: int = 0
    estimated: bool = False

    def to_dict(self) -> dict:
        return {
            "input_tokens": self.input_tokens,
            "output_tokens": self.output_tokens,
            "calls": self.calls,
            "estimated": self.estimated,
        }


def cost_ledger(results) -> Dict[str, AgentCost]:
    """Per-agent token and call totals over one or many results.

    Uses backend-reported usage where present; otherwise the documented
    character-quotient estimate, with the agent flagged estimated.
    """
    if isinstance(results, ElucidationResult):
        results = [results]
    totals: Dict[str, Dict[str, int]] = {}
    for result in results:
        for call in result.calls:
            agg = totals.setdefault(
                call.agent,
                {"input": 0, "output": 0, "calls": 0, "estimated": False},
            )
            agg["calls"] += 1
            if call.usage is not None:
                agg["input"] += call.usage[0]
                agg["output"] += call.usage[1]
            if call.usage_estimated:
                agg["estimated"] = True
    return {
        agent: AgentCost(
            input_tokens=v["input"],
            output_tokens=v["output"],
            calls=v["calls"],
            estimated=bool(v["estimated"]),
        )
        for agent, v in sorted(totals.items())
    }


#: Backend calls per spectrum in each mode (an orchestration invariant).
EXPECTED_CALLS = {
    "multi": 3,
    "ti-only": 2,
    "ret-only": 2,
    "single": 1,
    "no-experts": 0,
}
