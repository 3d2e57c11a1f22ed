"""Evaluation protocol: splits, Top-K exact match, runs, and reports.

The dataset is split 80/10/10 by seeded shuffle of sorted ids; the
training split doubles as the retrieval corpus. Each pipeline config is
evaluated over the test split for R runs (per-run seed = base + index)
and reported as Top-K exact-match accuracy with mean and spread,
cost-ledger totals, and caveat counters (prediction parse failures,
and cases where only aromaticity-relaxed matching would have scored).
Reports are emitted as a markdown table, raw CSVs, and hand-rolled SVG
sweep plots; the markdown regenerates byte-exactly from the CSVs.
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import json
import math
import random
import statistics
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

from .agents.backend import HttpChatBackend, LlmBackend, MockBackend
from .agents.pipeline import Pipeline, PipelineConfig, cost_ledger
from .chem import compare
from .peaks import load_table
from .retrieval import SpectraDatabase
from .spectra import Spectrum, load_spectra_jsonl
from .translator.checkpoint import load_checkpoint
from .translator.generate import (
    CandidateGenerator,
    NeuralCandidateGenerator,
    RetrievalCandidateGenerator,
)

DEFAULT_K_VALUES = (1, 3, 5, 10)


class EvaluationError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Splits
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SplitSpec:
    seed: int
    ratios: Tuple[float, float, float] = (0.8, 0.1, 0.1)

    def __post_init__(self):
        if abs(sum(self.ratios) - 1.0) > 1e-12:
            raise EvaluationError(f"ratios must sum to 1, got {self.ratios}")
        if any(r <= 0 for r in self.ratios):
            raise EvaluationError("all split ratios must be positive")


@dataclass(frozen=True)
class Split:
    train: Tuple[str, ...]
    valid: Tuple[str, ...]
    test: Tuple[str, ...]


def split(ids: Sequence[str], spec: SplitSpec) -> Split:
    """Deterministic disjoint covering split of the ids.

    Sizes are floor(r_train*n) / floor(r_valid*n) / remainder, drawn
    from a seeded shuffle of the sorted ids.
    """
    ids = sorted(set(ids))
    n = len(ids)
    if n < 10:
        raise EvaluationError(f"need at least 10 ids to split, got {n}")
    rng = random.Random(spec.seed)
    rng.shuffle(ids)
    n_train = math.floor(spec.ratios[0] * n)
    n_valid = math.floor(spec.ratios[1] * n)
    return Split(
        train=tuple(ids[:n_train]),
        valid=tuple(ids[n_train : n_train + n_valid]),
        test=tuple(ids[n_train + n_valid :]),
    )


# ---------------------------------------------------------------------------
# Scoring
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ScoreCard:
    accuracy: Dict[int, float]
    examples: int
    parse_failures: int
    relaxed_only_matches: int


def score_results(
    results: Sequence[Tuple[Sequence[str], str]],
    k_values: Sequence[int] = DEFAULT_K_VALUES,
) -> ScoreCard:
    """Top-K exact-match accuracy over (ranked, ground truth) pairs.

    A prediction counts at K when some entry with index < K is
    structurally equivalent to the truth. Short lists simply cannot
    score at large K. Prediction parse failures within the first
    max(k_values) entries are counted, as are examples where only the
    aromaticity-relaxed comparison would have matched.
    """
    if not results:
        raise EvaluationError("no results to score")
    k_values = sorted(set(k_values))
    k_max = k_values[-1]
    hits = {k: 0 for k in k_values}
    parse_failures = 0
    relaxed_only = 0
    for ranked, truth in results:
        first_hit: Optional[int] = None
        relaxed_hit = False
        for i, smiles in enumerate(ranked[:k_max]):
            outcome = compare(smiles, truth)
            if outcome.parse_failed:
                parse_failures += 1
            if outcome.equivalent and first_hit is None:
                first_hit = i
            if outcome.relaxed_equivalent:
                relaxed_hit = True
        if first_hit is None and relaxed_hit:
            relaxed_only += 1
        for k in k_values:
            if first_hit is not None and first_hit < k:
                hits[k] += 1
    n = len(results)
    return ScoreCard(
        accuracy={k: hits[k] / n for k in k_values},
        examples=n,
        parse_failures=parse_failures,
        relaxed_only_matches=relaxed_only,
    )


def topk_accuracy(
    results: Sequence[Tuple[Sequence[str], str]], k: int
) -> float:
    """Fraction of examples whose truth appears in the first k entries."""
    return score_results(results, k_values=(k,)).accuracy[k]


# ---------------------------------------------------------------------------
# Experiment configs and reports
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MatrixEntry:
    """One evaluated configuration (a labeled pipeline variant)."""

    label: str
    mode: str = "multi"
    num_candidates: int = 3
    ranked_size: Optional[int] = None
    n_retrieve: int = 10
    chemical_info: str = "none"
    beam_width: Optional[int] = None  # neural generator only
    sweep_group: Optional[str] = None
    sweep_x: Optional[float] = None

    def pipeline_config(self) -> PipelineConfig:
        return PipelineConfig(
            mode=self.mode,
            num_candidates=self.num_candidates,
            ranked_size=self.ranked_size,
            n_retrieve=self.n_retrieve,
            chemical_info=self.chemical_info,
        )

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "mode": self.mode,
            "num_candidates": self.num_candidates,
            "ranked_size": self.ranked_size,
            "n_retrieve": self.n_retrieve,
            "chemical_info": self.chemical_info,
            "beam_width": self.beam_width,
            "sweep_group": self.sweep_group,
            "sweep_x": self.sweep_x,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MatrixEntry":
        return cls(**d)

    def fingerprint(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode("utf-8")
        return hashlib.sha256(blob).hexdigest()[:12]


def ablation_matrix(num_candidates: int = 3) -> List[MatrixEntry]:
    """No-experts / single-expert / single-agent / full pipeline."""
    return [
        MatrixEntry(label="no-experts", mode="no-experts", num_candidates=num_candidates),
        MatrixEntry(label="ti-only", mode="ti-only", num_candidates=num_candidates),
        MatrixEntry(label="ret-only", mode="ret-only", num_candidates=num_candidates),
        MatrixEntry(label="single-agent", mode="single", num_candidates=num_candidates),
        MatrixEntry(label="multi-agent", mode="multi", num_candidates=num_candidates),
    ]


def candidate_sweep(values: Sequence[int] = (1, 3, 5, 10), mode: str = "multi") -> List[MatrixEntry]:
    return [
        MatrixEntry(
            label=f"candidates-{v}", mode=mode, num_candidates=v,
            sweep_group="candidates", sweep_x=float(v),
        )
        for v in values
    ]


def beam_sweep(values: Sequence[int] = (3, 5, 10), mode: str = "multi") -> List[MatrixEntry]:
    return [
        MatrixEntry(
            label=f"beam-{v}", mode=mode, num_candidates=v, beam_width=v,
            sweep_group="beam-width", sweep_x=float(v),
        )
        for v in values
    ]


def chemical_info_sweep(mode: str = "multi", num_candidates: int = 3) -> List[MatrixEntry]:
    return [
        MatrixEntry(
            label=f"info-{kind}", mode=mode, num_candidates=num_candidates,
            chemical_info=kind,
        )
        for kind in ("none", "atom_types", "scaffold", "carbon_count")
    ]


@dataclass
class RunReport:
    label: str
    fingerprint: str
    k_values: Tuple[int, ...]
    per_run: Dict[int, List[float]]  # k -> accuracy per run
    runs: int
    examples: int
    parse_failures: int
    relaxed_only_matches: int
    cost: Dict[str, dict]
    sweep_group: Optional[str] = None
    sweep_x: Optional[float] = None

    def mean(self, k: int) -> float:
        return statistics.fmean(self.per_run[k])

    def spread(self, k: int) -> float:
        return statistics.pstdev(self.per_run[k])

    def to_record(self) -> dict:
        return {
            "label": self.label,
            "fingerprint": self.fingerprint,
            "k_values": list(self.k_values),
            "per_run": {str(k): v for k, v in self.per_run.items()},
            "mean": {str(k): self.mean(k) for k in self.k_values},
            "spread": {str(k): self.spread(k) for k in self.k_values},
            "runs": self.runs,
            "examples": self.examples,
            "parse_failures": self.parse_failures,
            "relaxed_only_matches": self.relaxed_only_matches,
            "cost": self.cost,
            "sweep_group": self.sweep_group,
            "sweep_x": self.sweep_x,
        }


# ---------------------------------------------------------------------------
# Experiment execution
# ---------------------------------------------------------------------------


@dataclass
class ExperimentSpec:
    name: str
    dataset: str
    table: str
    configs: List[MatrixEntry]
    checkpoint: Optional[str] = None
    backend: Optional[dict] = None
    split_seed: int = 0
    runs: int = 3
    base_seed: int = 0
    k_values: Tuple[int, ...] = DEFAULT_K_VALUES
    jobs: int = 1
    exclude_query_from_db: bool = False

    @classmethod
    def from_file(cls, path) -> "ExperimentSpec":
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
        configs = [MatrixEntry.from_dict(c) for c in doc.pop("configs")]
        doc["k_values"] = tuple(doc.get("k_values", DEFAULT_K_VALUES))
        return cls(configs=configs, **doc)


def _build_backend(spec: Optional[dict], seed: Optional[int] = None) -> Optional[LlmBackend]:
    if spec is None:
        return None
    kind = spec.get("kind")
    if kind == "mock":
        backend = MockBackend.from_file(spec["path"])
        return backend
    if kind == "http":
        return HttpChatBackend(
            endpoint=spec["endpoint"],
            model=spec.get("model", ""),
            temperature=spec.get("temperature", 0.8),
            timeout=spec.get("timeout", 60.0),
            retries=spec.get("retries", 3),
            backoff=spec.get("backoff", 1.0),
            seed=seed,
        )
    raise EvaluationError(f"unknown backend kind {kind!r}")


def _materialize(spec: ExperimentSpec):
    """Load all artifacts up front so missing ones fail before any spend."""
    for label, path in (("dataset", spec.dataset), ("table", spec.table),
                        ("checkpoint", spec.checkpoint)):
        if path is not None and not Path(path).exists():
            raise EvaluationError(f"missing {label}: {path}")
    if spec.backend is not None and spec.backend.get("kind") == "mock":
        if not Path(spec.backend["path"]).exists():
            raise EvaluationError(f"missing mock script: {spec.backend['path']}")
    spectra = load_spectra_jsonl(spec.dataset)
    by_id = {s.id: s for s in spectra}
    if len(by_id) != len(spectra):
        raise EvaluationError("dataset ids are not unique")
    table = load_table(spec.table)
    parts = split(list(by_id), SplitSpec(seed=spec.split_seed))
    db = SpectraDatabase([by_id[i] for i in parts.train])
    queries = [by_id[i] for i in parts.test]
    model_vocab = None
    if spec.checkpoint is not None:
        model, vocab, _ = load_checkpoint(spec.checkpoint)
        model_vocab = (model, vocab)
    return table, db, queries, model_vocab, parts


def _generator_for(entry: MatrixEntry, db: SpectraDatabase, model_vocab,
                   exclude_query: bool) -> CandidateGenerator:
    if model_vocab is not None:
        model, vocab = model_vocab
        return NeuralCandidateGenerator(model, vocab, beam_width=entry.beam_width)
    return RetrievalCandidateGenerator(db, exclude_query_id=exclude_query)


def _evaluate_entry(
    entry: MatrixEntry,
    table,
    db: SpectraDatabase,
    queries: Sequence[Spectrum],
    model_vocab,
    backend_spec: Optional[dict],
    spec: ExperimentSpec,
) -> RunReport:
    per_run: Dict[int, List[float]] = {k: [] for k in spec.k_values}
    parse_failures = 0
    relaxed_only = 0
    cost_totals: Dict[str, dict] = {}
    for run_index in range(spec.runs):
        run_seed = spec.base_seed + run_index
        backend = _build_backend(backend_spec, seed=run_seed)
        generator = _generator_for(entry, db, model_vocab, spec.exclude_query_from_db)
        config = entry.pipeline_config()
        if spec.exclude_query_from_db:
            config = dataclasses.replace(config, exclude_query_from_db=True)
        pipeline = Pipeline(generator, table, db, backend, config)

        def one(q: Spectrum):
            result = pipeline.elucidate(q)
            return result, (list(result.ranked), q.smiles)

        if spec.jobs > 1:
            with ThreadPoolExecutor(max_workers=spec.jobs) as pool:
                outcomes = list(pool.map(one, queries))
        else:
            outcomes = [one(q) for q in queries]
        results = [pair for _, pair in outcomes]
        card = score_results(results, k_values=spec.k_values)
        for k in spec.k_values:
            per_run[k].append(card.accuracy[k])
        parse_failures += card.parse_failures
        relaxed_only += card.relaxed_only_matches
        for agent, agg in cost_ledger([r for r, _ in outcomes]).items():
            slot = cost_totals.setdefault(
                agent, {"input_tokens": 0, "output_tokens": 0, "calls": 0,
                        "estimated": False},
            )
            slot["input_tokens"] += agg.input_tokens
            slot["output_tokens"] += agg.output_tokens
            slot["calls"] += agg.calls
            slot["estimated"] = slot["estimated"] or agg.estimated
    return RunReport(
        label=entry.label,
        fingerprint=entry.fingerprint(),
        k_values=tuple(spec.k_values),
        per_run=per_run,
        runs=spec.runs,
        examples=len(queries),
        parse_failures=parse_failures,
        relaxed_only_matches=relaxed_only,
        cost=cost_totals,
        sweep_group=entry.sweep_group,
        sweep_x=entry.sweep_x,
    )


def run_experiment(spec: ExperimentSpec) -> List[RunReport]:
    table, db, queries, model_vocab, _ = _materialize(spec)
    if not queries:
        raise EvaluationError("test split is empty")
    return [
        _evaluate_entry(entry, table, db, queries, model_vocab, spec.backend, spec)
        for entry in spec.configs
    ]


# ---------------------------------------------------------------------------
# Report emission (markdown + CSV + SVG), regenerable from the CSVs
# ---------------------------------------------------------------------------


RESULTS_CSV = "results.csv"
META_CSV = "config_meta.csv"
REPORT_MD = "report.md"
REPORTS_JSON = "reports.json"


def _results_rows(reports: Sequence[RunReport]) -> List[dict]:
    rows = []
    for r in reports:
        for k in r.k_values:
            for run, acc in enumerate(r.per_run[k]):
                rows.append({
                    "config": r.label,
                    "run": str(run),
                    "k": str(k),
                    "accuracy": f"{acc:.6f}",
                })
    return rows


def _meta_rows(reports: Sequence[RunReport]) -> List[dict]:
    rows = []
    for r in reports:
        calls = sum(v["calls"] for v in r.cost.values())
        tokens_in = sum(v["input_tokens"] for v in r.cost.values())
        tokens_out = sum(v["output_tokens"] for v in r.cost.values())
        estimated = any(v["estimated"] for v in r.cost.values())
        rows.append({
            "config": r.label,
            "fingerprint": r.fingerprint,
            "runs": str(r.runs),
            "examples": str(r.examples),
            "parse_failures": str(r.parse_failures),
            "relaxed_only_matches": str(r.relaxed_only_matches),
            "calls": str(calls),
            "input_tokens": str(tokens_in),
            "output_tokens": str(tokens_out),
            "usage_estimated": "yes" if estimated else "no",
            "sweep_group": r.sweep_group or "",
            "sweep_x": "" if r.sweep_x is None else f"{r.sweep_x:g}",
        })
    return rows


def build_markdown(results_rows: Sequence[dict], meta_rows: Sequence[dict]) -> str:
    """Markdown report as a pure function of the two CSV row sets."""
    by_config: Dict[str, Dict[int, List[float]]] = {}
    order: List[str] = []
    for row in results_rows:
        cfg = row["config"]
        if cfg not in by_config:
            by_config[cfg] = {}
            order.append(cfg)
        by_config[cfg].setdefault(int(row["k"]), []).append(float(row["accuracy"]))
    meta = {row["config"]: row for row in meta_rows}
    lines = ["# Evaluation report", ""]
    for cfg in order:
        ks = sorted(by_config[cfg])
        m = meta.get(cfg, {})
        lines.append(f"## {cfg}")
        lines.append("")
        if m:
            lines.append(
                f"fingerprint `{m['fingerprint']}` | runs {m['runs']} | "
                f"examples {m['examples']} | backend calls {m['calls']} | "
                f"tokens in/out {m['input_tokens']}/{m['output_tokens']}"
                f"{' (estimated)' if m['usage_estimated'] == 'yes' else ''}"
            )
            lines.append(
                f"caveats: prediction parse failures {m['parse_failures']}, "
                f"relaxed-only matches {m['relaxed_only_matches']}"
            )
            lines.append("")
        header = "| metric | " + " | ".join(f"Top-{k}" for k in ks) + " |"
        sep = "|---" * (len(ks) + 1) + "|"
        mean_row = "| mean | " + " | ".join(
            f"{statistics.fmean(by_config[cfg][k]):.4f}" for k in ks
        ) + " |"
        spread_row = "| spread | " + " | ".join(
            f"{statistics.pstdev(by_config[cfg][k]):.4f}" for k in ks
        ) + " |"
        lines.extend([header, sep, mean_row, spread_row, ""])
    return "\n".join(lines)


def _svg_line_plot(points_by_series: Dict[str, List[Tuple[float, float]]],
                   title: str, width: int = 480, height: int = 320) -> str:
    """Minimal deterministic SVG: one polyline per series, y in [0, 1]."""
    margin = 40.0
    xs = sorted({x for pts in points_by_series.values() for x, _ in pts})
    if not xs:
        raise EvaluationError("empty sweep plot")
    x_lo, x_hi = min(xs), max(xs)
    x_span = (x_hi - x_lo) or 1.0

    def sx(x: float) -> float:
        return margin + (x - x_lo) / x_span * (width - 2 * margin)

    def sy(y: float) -> float:
        return height - margin - y * (height - 2 * margin)

    colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"]
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<text x="{width / 2:.1f}" y="20" text-anchor="middle" font-size="14">{title}</text>',
        f'<line x1="{margin}" y1="{sy(0):.1f}" x2="{width - margin}" y2="{sy(0):.1f}" stroke="#000"/>',
        f'<line x1="{margin}" y1="{sy(0):.1f}" x2="{margin}" y2="{sy(1):.1f}" stroke="#000"/>',
    ]
    for x in xs:
        parts.append(
            f'<text x="{sx(x):.1f}" y="{height - margin + 16:.1f}" '
            f'text-anchor="middle" font-size="11">{x:g}</text>'
        )
    for tick in (0.0, 0.5, 1.0):
        parts.append(
            f'<text x="{margin - 6:.1f}" y="{sy(tick) + 4:.1f}" '
            f'text-anchor="end" font-size="11">{tick:g}</text>'
        )
    for si, (name, pts) in enumerate(sorted(points_by_series.items())):
        color = colors[si % len(colors)]
        coords = " ".join(f"{sx(x):.1f},{sy(y):.1f}" for x, y in sorted(pts))
        parts.append(f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="2"/>')
        for x, y in pts:
            parts.append(f'<circle cx="{sx(x):.1f}" cy="{sy(y):.1f}" r="3" fill="{color}"/>')
        parts.append(
            f'<text x="{width - margin + 4:.1f}" y="{30 + 14 * si}" '
            f'font-size="11" fill="{color}">{name}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def emit_report(reports: Sequence[RunReport], outdir) -> List[str]:
    """Write markdown, raw CSVs, JSON, and sweep SVGs; returns file names."""
    if not reports:
        raise EvaluationError("no reports to emit")
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    results_rows = _results_rows(reports)
    meta_rows = _meta_rows(reports)
    written = []

    path = outdir / RESULTS_CSV
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=["config", "run", "k", "accuracy"])
        writer.writeheader()
        writer.writerows(results_rows)
    written.append(RESULTS_CSV)

    path = outdir / META_CSV
    fieldnames = ["config", "fingerprint", "runs", "examples", "parse_failures",
                  "relaxed_only_matches", "calls", "input_tokens", "output_tokens",
                  "usage_estimated", "sweep_group", "sweep_x"]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fieldnames)
        writer.writeheader()
        writer.writerows(meta_rows)
    written.append(META_CSV)

    (outdir / REPORT_MD).write_text(build_markdown(results_rows, meta_rows),
                                    encoding="utf-8")
    written.append(REPORT_MD)

    (outdir / REPORTS_JSON).write_text(
        json.dumps([r.to_record() for r in reports], sort_keys=True, indent=2) + "\n",
        encoding="utf-8",
    )
    written.append(REPORTS_JSON)

    sweeps: Dict[str, List[RunReport]] = {}
    for r in reports:
        if r.sweep_group and r.sweep_x is not None:
            sweeps.setdefault(r.sweep_group, []).append(r)
    for group, members in sorted(sweeps.items()):
        series = {
            f"Top-{k}": [(r.sweep_x, r.mean(k)) for r in members]
            for k in members[0].k_values
        }
        name = f"sweep-{group}.svg"
        (outdir / name).write_text(_svg_line_plot(series, group), encoding="utf-8")
        written.append(name)
    return written


def regenerate_markdown(outdir) -> str:
    """Rebuild report.md from the persisted CSVs (byte-identical)."""
    outdir = Path(outdir)
    with open(outdir / RESULTS_CSV, "r", encoding="utf-8", newline="") as fh:
        results_rows = list(csv.DictReader(fh))
    with open(outdir / META_CSV, "r", encoding="utf-8", newline="") as fh:
        meta_rows = list(csv.DictReader(fh))
    text = build_markdown(results_rows, meta_rows)
    (outdir / REPORT_MD).write_text(text, encoding="utf-8")
    return text
