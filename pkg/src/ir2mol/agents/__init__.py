"""Expert agents, prompt templates, LLM backends, and the pipeline."""

from .backend import (
    API_KEY_ENV,
    BackendError,
    HttpChatBackend,
    LlmBackend,
    LlmResponse,
    MockBackend,
    estimate_tokens,
    prompt_digest,
)
from .experts import (
    AgentCall,
    ElucidationResult,
    ExpertAnalysis,
    ExpertError,
    parse_ret_output,
    parse_se_output,
    parse_ti_output,
    run_ret_expert,
    run_se_expert,
    run_single_agent,
    run_ti_expert,
)
from .pipeline import (
    EXPECTED_CALLS,
    AgentCost,
    Pipeline,
    PipelineConfig,
    PipelineError,
    cost_ledger,
)
from .prompts import (
    CHEMICAL_INFO_KINDS,
    ChemicalInfo,
    PromptError,
    PromptTemplate,
    build_templates,
    derive_chemical_info,
    format_candidates,
    format_hits,
    format_interpretations,
)

__all__ = [
    "API_KEY_ENV",
    "AgentCall",
    "AgentCost",
    "BackendError",
    "CHEMICAL_INFO_KINDS",
    "ChemicalInfo",
    "ElucidationResult",
    "EXPECTED_CALLS",
    "ExpertAnalysis",
    "ExpertError",
    "HttpChatBackend",
    "LlmBackend",
    "LlmResponse",
    "MockBackend",
    "Pipeline",
    "PipelineConfig",
    "PipelineError",
    "PromptError",
    "PromptTemplate",
    "build_templates",
    "cost_ledger",
    "derive_chemical_info",
    "estimate_tokens",
    "format_candidates",
    "format_hits",
    "format_interpretations",
    "parse_ret_output",
    "parse_se_output",
    "parse_ti_output",
    "prompt_digest",
    "run_ret_expert",
    "run_se_expert",
    "run_single_agent",
    "run_ti_expert",
]
