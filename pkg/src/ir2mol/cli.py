"""Command-line interface.

One executable, one subcommand per pipeline stage: ingest, preprocess,
peaks, retrieve, train, decode, elucidate, evaluate, report. Output is
JSON-first (--json) with a human rendering on top; defaults follow the
published hyperparameters. Exit codes: 0 success, 2 usage error
(unknown flag, missing file, schema violation), 1 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import List, Optional

from . import __version__
from .agents.backend import BackendError, MockBackend
from .agents.pipeline import Pipeline, PipelineConfig, PipelineError, cost_ledger
from .chem import SmilesParseError, canonical_smiles
from .evaluation import (
    EvaluationError,
    ExperimentSpec,
    emit_report,
    regenerate_markdown,
    run_experiment,
)
from .peaks import PeakError, TableError, assign, assignments_to_records, find_peaks, load_table
from .retrieval import RetrievalError, SpectraDatabase, retrieve
from .spectra import (
    ABSORBANCE,
    TRANSMITTANCE,
    SpectrumError,
    WavenumberGrid,
    interpolate,
    l2_normalize,
    load_spectra_jsonl,
    read_raw_csv,
    save_spectra_jsonl,
    spectrum_to_record,
    to_absorbance,
)
from .translator.checkpoint import CheckpointError, load_checkpoint, save_checkpoint
from .translator.generate import NeuralCandidateGenerator, RetrievalCandidateGenerator
from .translator.model import TranslatorConfig, TranslatorModel
from .translator.train import TrainingConfig, TrainingError, train
from .translator.vocab import TokenVocabulary


class UsageError(Exception):
    def __init__(self, message: str, category: str = "usage"):
        super().__init__(message)
        self.category = category


_USAGE_EXCEPTIONS = (
    UsageError, SpectrumError, TableError, PeakError, RetrievalError,
    EvaluationError, PipelineError, CheckpointError, SmilesParseError,
    FileNotFoundError, json.JSONDecodeError,
)


def _require(path: Optional[str], what: str) -> str:
    if path is None:
        raise UsageError(f"{what} is required", category="missing-flag")
    if not Path(path).exists():
        raise UsageError(f"missing {what}: {path}", category="missing-file")
    return path


def _emit(args, payload, human) -> None:
    if args.json:
        print(json.dumps(payload, sort_keys=True, indent=2))
    else:
        human(payload)


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_ingest(args) -> int:
    _require(args.input, "input CSV")
    raw = read_raw_csv(args.input, mode=args.mode)
    grid = WavenumberGrid(args.grid_start, args.grid_end, args.grid_count)
    spectrum_id = args.id or Path(args.input).stem
    s = interpolate(raw, grid, kind=args.kind, id=spectrum_id, smiles=args.smiles)
    save_spectra_jsonl([s], args.output)
    payload = {"output": args.output, "id": s.id, "mode": s.mode,
               "grid": s.grid.to_dict(), "points_in": len(raw.points)}
    _emit(args, payload, lambda p: print(
        f"ingested {p['points_in']} points -> {p['output']} "
        f"({p['grid']['count']} grid values, {p['mode']})"))
    return 0


def cmd_preprocess(args) -> int:
    _require(args.input, "input JSONL")
    spectra = load_spectra_jsonl(args.input)
    out = []
    converted = 0
    for s in spectra:
        if s.mode == TRANSMITTANCE:
            s = to_absorbance(s)
            converted += 1
        if args.normalize:
            s = l2_normalize(s)
        out.append(s)
    save_spectra_jsonl(out, args.output)
    payload = {"output": args.output, "spectra": len(out), "converted": converted,
               "normalized": bool(args.normalize)}
    _emit(args, payload, lambda p: print(
        f"wrote {p['spectra']} spectra to {p['output']} "
        f"({p['converted']} converted to absorbance)"))
    return 0


def cmd_peaks(args) -> int:
    _require(args.input, "input JSONL")
    table = load_table(_require(args.table, "absorption table")) if args.table else []
    spectra = load_spectra_jsonl(args.input)
    payload = []
    for s in spectra:
        peaks = find_peaks(s, height=args.height, distance=args.distance)
        records = assignments_to_records(assign(peaks, table))
        payload.append({"id": s.id, "assignments": records})

    def human(p):
        for entry in p:
            print(f"{entry['id']}: {len(entry['assignments'])} peaks")
            for a in entry["assignments"]:
                for line in a["text"]:
                    print(f"  {line}")

    _emit(args, payload, human)
    return 0


def cmd_retrieve(args) -> int:
    db = SpectraDatabase(load_spectra_jsonl(_require(args.db, "database JSONL")))
    queries = load_spectra_jsonl(_require(args.query, "query JSONL"))
    payload = []
    for q in queries:
        view = db.exclude_self(args.exclude_id) if args.exclude_id else db
        hits = retrieve(view, q, n=args.top_n)
        payload.append({
            "id": q.id,
            "hits": [{"smiles": h.smiles, "similarity": h.similarity, "id": h.id}
                     for h in hits],
        })

    def human(p):
        for entry in p:
            print(f"query {entry['id']}:")
            for h in entry["hits"]:
                print(f"  {h['smiles']} : {h['similarity']:.4f}  ({h['id']})")

    _emit(args, payload, human)
    return 0


def cmd_train(args) -> int:
    train_set = load_spectra_jsonl(_require(args.train, "training JSONL"))
    valid_set = load_spectra_jsonl(_require(args.valid, "validation JSONL"))
    for s in train_set + valid_set:
        if s.smiles is None:
            raise UsageError(f"spectrum {s.id!r} has no SMILES label",
                             category="schema")
        if s.mode != ABSORBANCE:
            raise UsageError(f"spectrum {s.id!r} is not absorbance",
                             category="schema")
    overrides = {}
    if args.config:
        with open(_require(args.config, "config file"), "r", encoding="utf-8") as fh:
            overrides = json.load(fh)
    vocab = TokenVocabulary.from_corpus(s.smiles for s in train_set)
    model_kwargs = dict(
        vocab_size=len(vocab),
        spectrum_len=train_set[0].grid.count,
        d=args.d,
        heads=args.heads,
        encoder_layers=args.encoder_layers,
        decoder_layers=args.decoder_layers,
        max_target_len=args.max_target_len,
        beam_width=args.beam_width,
        seed=args.seed,
    )
    model_kwargs.update(overrides.get("model", {}))
    train_kwargs = dict(
        batch_size=args.batch_size,
        learning_rate=args.lr,
        warmup_steps=args.warmup,
        max_epochs=args.max_epochs,
        patience=args.patience,
        decay=args.decay,
        seed=args.seed,
    )
    train_kwargs.update(overrides.get("training", {}))
    config = TranslatorConfig(**model_kwargs)
    tcfg = TrainingConfig(**train_kwargs)
    model = TranslatorModel(config)
    result = train(model, vocab,
                   [(s, s.smiles) for s in train_set],
                   [(s, s.smiles) for s in valid_set], tcfg)
    save_checkpoint(args.output, result.model, vocab, training=tcfg,
                    metadata={"best_epoch": result.best_epoch,
                              "best_bleu": result.best_bleu,
                              "epochs_run": len(result.history),
                              "stopped_early": result.stopped_early})
    if args.history:
        with open(args.history, "w", encoding="utf-8") as fh:
            json.dump([{"epoch": r.epoch, "train_loss": r.train_loss,
                        "val_bleu": r.val_bleu, "lr": r.lr}
                       for r in result.history], fh, sort_keys=True, indent=2)
    payload = {"checkpoint": args.output, "epochs": len(result.history),
               "best_epoch": result.best_epoch, "best_bleu": result.best_bleu,
               "stopped_early": result.stopped_early}
    _emit(args, payload, lambda p: print(
        f"trained {p['epochs']} epochs (best {p['best_epoch']}, "
        f"BLEU {p['best_bleu']:.4f}) -> {p['checkpoint']}"))
    return 0


def cmd_decode(args) -> int:
    model, vocab, _ = load_checkpoint(_require(args.checkpoint, "checkpoint"))
    spectra = load_spectra_jsonl(_require(args.input, "input JSONL"))
    gen = NeuralCandidateGenerator(model, vocab, max_len=args.max_len,
                                   beam_width=args.beam_width)
    payload = []
    for s in spectra:
        cands = gen.generate(s, args.beam_width)
        payload.append({"id": s.id, "candidates": cands.to_records()})

    def human(p):
        for entry in p:
            print(f"{entry['id']}:")
            for c in entry["candidates"]:
                print(f"  {c['smiles']}  score={c['score']:.4f} [{c['origin']}]")

    _emit(args, payload, human)
    return 0


def _load_pipeline(args):
    config_doc = {}
    if args.config:
        with open(_require(args.config, "pipeline config"), "r", encoding="utf-8") as fh:
            config_doc = json.load(fh)
    backend_doc = config_doc.get("backend")
    if args.mock:
        backend_doc = {"kind": "mock", "path": args.mock}
    mode = args.mode or config_doc.get("mode", "multi")
    kind = args.chemical_info or config_doc.get("chemical_info", "none")
    pcfg = PipelineConfig(
        mode=mode,
        num_candidates=args.num_candidates or config_doc.get("num_candidates", 3),
        ranked_size=config_doc.get("ranked_size"),
        n_retrieve=args.top_n or config_doc.get("n_retrieve", 10),
        peak_height=config_doc.get("peak_height", 1.0),
        peak_distance=config_doc.get("peak_distance", 50),
        chemical_info=kind,
        exclude_query_from_db=bool(config_doc.get("exclude_query_from_db", False)),
    )
    backend = None
    if pcfg.mode != "no-experts":
        if backend_doc is None:
            raise UsageError("a backend (config file or --mock) is required "
                             f"for mode {pcfg.mode!r}", category="missing-flag")
        if backend_doc.get("kind") == "mock":
            backend = MockBackend.from_file(_require(backend_doc["path"], "mock script"))
        else:
            from .agents.backend import HttpChatBackend

            backend = HttpChatBackend(
                endpoint=backend_doc["endpoint"],
                model=backend_doc.get("model", ""),
                temperature=backend_doc.get("temperature", 0.8),
            )
    db = SpectraDatabase(load_spectra_jsonl(_require(args.db, "database JSONL")))
    table = load_table(_require(args.table, "absorption table"))
    if args.checkpoint:
        model, vocab, _ = load_checkpoint(_require(args.checkpoint, "checkpoint"))
        generator = NeuralCandidateGenerator(model, vocab)
    else:
        generator = RetrievalCandidateGenerator(
            db, exclude_query_id=pcfg.exclude_query_from_db)
    return Pipeline(generator, table, db, backend, pcfg)


def cmd_elucidate(args) -> int:
    pipeline = _load_pipeline(args)
    queries = load_spectra_jsonl(_require(args.input, "query JSONL"))
    payload = []
    for q in queries:
        result = pipeline.elucidate(q)
        record = result.to_record()
        record["id"] = q.id
        record["cost"] = {agent: c.to_dict()
                          for agent, c in cost_ledger(result).items()}
        payload.append(record)

    def human(p):
        for entry in p:
            print(f"{entry['id']} [{entry['mode']}"
                  f"{', fallback' if entry['fallback'] else ''}]:")
            for rank, smiles in enumerate(entry["ranked"], start=1):
                print(f"  {rank}. {smiles}")

    _emit(args, payload, human)
    return 0


def cmd_evaluate(args) -> int:
    spec = ExperimentSpec.from_file(_require(args.config, "experiment config"))
    if args.jobs is not None:
        spec.jobs = args.jobs
    reports = run_experiment(spec)
    blob = json.dumps([c.to_dict() for c in spec.configs], sort_keys=True)
    import hashlib

    fingerprint = hashlib.sha256(blob.encode("utf-8")).hexdigest()[:12]
    outdir = Path(args.outdir) / f"{spec.name}-{fingerprint}"
    written = emit_report(reports, outdir)
    payload = {"outdir": str(outdir), "files": written,
               "reports": [r.to_record() for r in reports]}
    _emit(args, payload, lambda p: print(
        f"wrote {len(p['files'])} files to {p['outdir']}"))
    return 0


def cmd_report(args) -> int:
    rundir = _require(args.dir, "run directory")
    regenerate_markdown(rundir)
    payload = {"dir": rundir, "regenerated": "report.md"}
    _emit(args, payload, lambda p: print(f"regenerated {p['dir']}/report.md"))
    return 0


def cmd_canon(args) -> int:
    payload = []
    for line in (args.smiles or sys.stdin.read().splitlines()):
        line = line.strip()
        if not line:
            continue
        try:
            payload.append({"input": line, "canonical": canonical_smiles(line)})
        except SmilesParseError as exc:
            payload.append({"input": line, "error": str(exc)})

    def human(p):
        for entry in p:
            if "canonical" in entry:
                print(f"{entry['input']} -> {entry['canonical']}")
            else:
                print(f"{entry['input']} !! {entry['error']}")

    _emit(args, payload, human)
    return 0


def cmd_compare(args) -> int:
    from .chem import compare as chem_compare

    if args.smiles:
        if len(args.smiles) != 2:
            raise UsageError("compare takes exactly two SMILES", category="usage")
        pairs = [tuple(args.smiles)]
    else:
        pairs = []
        for line in sys.stdin.read().splitlines():
            parts = line.split()
            if len(parts) == 2:
                pairs.append((parts[0], parts[1]))
    payload = []
    for a, b in pairs:
        r = chem_compare(a, b)
        payload.append({
            "a": a, "b": b,
            "equivalent": r.equivalent,
            "relaxed_equivalent": r.relaxed_equivalent,
            "parse_failed": r.parse_failed,
            "stereo_stripped": r.stereo_stripped,
        })

    def human(p):
        for entry in p:
            verdict = "EQUIVALENT" if entry["equivalent"] else "different"
            print(f"{entry['a']}  vs  {entry['b']}: {verdict}")

    _emit(args, payload, human)
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.ArgumentDefaultsHelpFormatter
    parser = argparse.ArgumentParser(
        prog="ir2mol",
        description="Molecular structure elucidation from infrared spectra.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="interpolate a raw CSV onto the grid",
                       formatter_class=fmt)
    p.add_argument("--input", required=True, help="CSV with wavenumber,intensity")
    p.add_argument("--output", required=True, help="output JSONL path")
    p.add_argument("--mode", choices=[TRANSMITTANCE, ABSORBANCE], default=None,
                   help="intensity mode; default reads the <input>.mode sidecar")
    p.add_argument("--id", default=None, help="spectrum id (default: file stem)")
    p.add_argument("--smiles", default=None, help="ground-truth SMILES label")
    p.add_argument("--grid-start", type=float, default=500.0)
    p.add_argument("--grid-end", type=float, default=4000.0)
    p.add_argument("--grid-count", type=int, default=3501)
    p.add_argument("--kind", choices=["pchip", "cubic", "linear"], default="pchip",
                   help="interpolation kind")
    p.add_argument("--json", action="store_true", help="JSON output")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("preprocess", help="convert transmittance to absorbance",
                       formatter_class=fmt)
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--normalize", action="store_true", help="L2-normalize values")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("peaks", help="extract peaks and assign table bands",
                       formatter_class=fmt)
    p.add_argument("--input", required=True, help="absorbance spectra JSONL")
    p.add_argument("--table", default=None, help="absorption-table CSV")
    p.add_argument("--height", type=float, default=1.0, help="minimum absorbance")
    p.add_argument("--distance", type=int, default=50, help="minimum index spacing")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_peaks)

    p = sub.add_parser("retrieve", help="top-N cosine-similar spectra",
                       formatter_class=fmt)
    p.add_argument("--db", required=True, help="spectra database JSONL")
    p.add_argument("--query", required=True, help="query spectra JSONL")
    p.add_argument("--top-n", type=int, default=10)
    p.add_argument("--exclude-id", default=None, help="drop this id from the corpus")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_retrieve)

    p = sub.add_parser("train", help="train the spectrum-to-SMILES translator",
                       formatter_class=fmt)
    p.add_argument("--train", required=True, help="training spectra JSONL (labeled)")
    p.add_argument("--valid", required=True, help="validation spectra JSONL")
    p.add_argument("--output", required=True, help="checkpoint path")
    p.add_argument("--history", default=None, help="write per-epoch history JSON")
    p.add_argument("--config", default=None, help="JSON with model/training overrides")
    p.add_argument("--d", type=int, default=128, help="hidden dimension")
    p.add_argument("--heads", type=int, default=4)
    p.add_argument("--encoder-layers", type=int, default=2)
    p.add_argument("--decoder-layers", type=int, default=2)
    p.add_argument("--max-target-len", type=int, default=128)
    p.add_argument("--beam-width", type=int, default=3)
    p.add_argument("--batch-size", type=int, default=16)
    p.add_argument("--lr", type=float, default=0.001)
    p.add_argument("--warmup", type=int, default=8000)
    p.add_argument("--max-epochs", type=int, default=300)
    p.add_argument("--patience", type=int, default=25)
    p.add_argument("--decay", choices=["inverse_sqrt", "linear"],
                   default="inverse_sqrt")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("decode", help="beam-decode candidates from a checkpoint",
                       formatter_class=fmt)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--input", required=True, help="query spectra JSONL")
    p.add_argument("--beam-width", type=int, default=3)
    p.add_argument("--max-len", type=int, default=None)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("elucidate", help="run the expert pipeline on spectra",
                       formatter_class=fmt)
    p.add_argument("--input", required=True, help="query spectra JSONL")
    p.add_argument("--db", required=True, help="spectra database JSONL")
    p.add_argument("--table", required=True, help="absorption-table CSV")
    p.add_argument("--checkpoint", default=None,
                   help="translator checkpoint (default: retrieval fallback)")
    p.add_argument("--config", default=None, help="pipeline config JSON")
    p.add_argument("--mock", default=None, help="mock backend script JSON")
    p.add_argument("--mode", default=None,
                   choices=["multi", "ti-only", "ret-only", "single", "no-experts"])
    p.add_argument("--chemical-info", default=None,
                   choices=["none", "atom_types", "scaffold", "carbon_count"])
    p.add_argument("--num-candidates", type=int, default=None)
    p.add_argument("--top-n", type=int, default=None, help="retrieval depth")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_elucidate)

    p = sub.add_parser("evaluate", help="run an experiment matrix",
                       formatter_class=fmt)
    p.add_argument("--config", required=True, help="experiment spec JSON")
    p.add_argument("--outdir", default="runs", help="output directory root")
    p.add_argument("--jobs", type=int, default=None, help="worker cap")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("report", help="regenerate report.md from raw CSVs",
                       formatter_class=fmt)
    p.add_argument("--dir", required=True, help="run directory")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("canon", help="canonicalize SMILES from args or stdin",
                       formatter_class=fmt)
    p.add_argument("smiles", nargs="*", help="SMILES strings (default: stdin lines)")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_canon)

    p = sub.add_parser("compare", help="structure equivalence of SMILES pairs",
                       formatter_class=fmt)
    p.add_argument("smiles", nargs="*",
                   help="two SMILES (default: whitespace pairs from stdin)")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_compare)

    return parser


def _error_payload(category: str, message: str) -> str:
    return json.dumps({"error": {"category": category, "message": message}},
                      sort_keys=True)


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _USAGE_EXCEPTIONS as exc:
        category = getattr(exc, "category", exc.__class__.__name__)
        print(_error_payload(str(category), str(exc)), file=sys.stderr)
        return 2
    except (BackendError, TrainingError, RuntimeError, ValueError) as exc:
        category = getattr(exc, "category", exc.__class__.__name__)
        print(_error_payload(str(category), str(exc)), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
