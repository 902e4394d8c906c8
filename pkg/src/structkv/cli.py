"""Command-line interface.

Every subcommand reads an optional JSON config, writes JSON artifacts into
an output directory, and exits nonzero with a machine-readable error object
on stderr when anything fails.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from .chunking import Chunk, partition_chunks
from .config import PipelineConfig
from .cpg import Cpg, build_cpg, export_cpg_json, import_cpg_json
from .errors import ConfigError, ParameterError, StructKVError
from .lexer import load_source, tokenize
from .metrics import (
    normalized_edit_distance,
    set_metrics,
    structure_score,
    topk_overlap_jaccard,
)
from .parsing import parse_subset
from .pipeline import load_corpus, load_external_cpgs, run_pipeline
from .plan import CompressionPlan, canonical_json


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        args.handler(args)
        return 0
    except StructKVError as exc:
        _emit_error(exc)
        return 1
    except OSError as exc:
        _emit_error(exc)
        return 1


def _emit_error(exc: Exception) -> None:
    doc = {"error": {"type": type(exc).__name__, "message": str(exc)}}
    print(json.dumps(doc, sort_keys=True), file=sys.stderr)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="structkv",
        description="Structure-aware KV-cache compression planner for code.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_chunk = sub.add_parser("chunk", help="partition a corpus into chunks")
    p_chunk.add_argument("dir")
    _common(p_chunk)
    p_chunk.set_defaults(handler=_cmd_chunk)

    p_cpg = sub.add_parser("cpg", help="build property graphs for one file")
    p_cpg.add_argument("file")
    p_cpg.add_argument(
        "--dir", help="corpus root; chunk ids then match corpus-wide numbering"
    )
    _common(p_cpg)
    p_cpg.set_defaults(handler=_cmd_cpg)

    p_score = sub.add_parser("score", help="score chunks against a query")
    p_score.add_argument("--query", required=True)
    p_score.add_argument("--dir", help="corpus root (falls back to config corpus_dir)")
    _common(p_score)
    p_score.set_defaults(handler=_cmd_score)

    p_comp = sub.add_parser("compress", help="plan compression for a corpus")
    p_comp.add_argument("--cap", type=float, required=True, help="base retention ratio")
    p_comp.add_argument("--k", type=int, required=True, help="chunks to select")
    p_comp.add_argument("--query")
    p_comp.add_argument("--dir")
    _common(p_comp)
    p_comp.set_defaults(handler=_cmd_compress)

    p_eval = sub.add_parser("evaluate", help="recompute retention metrics for a plan")
    p_eval.add_argument("--plan", required=True)
    p_eval.add_argument("--dir")
    p_eval.add_argument("--external-cpgs", help="sidecar graph documents (JSON array)")
    p_eval.add_argument(
        "--gold",
        help="JSON file with 'predicted'/'gold' sets (and optionally "
        "'predicted_text'/'gold_text') for overlap and edit-distance metrics",
    )
    _common(p_eval)
    p_eval.set_defaults(handler=_cmd_evaluate)

    p_pipe = sub.add_parser("pipeline", help="run the full pipeline from a config")
    p_pipe.add_argument("--config", required=True)
    p_pipe.add_argument("--out", default="out")
    p_pipe.set_defaults(handler=_cmd_pipeline)

    return parser


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--out", default="out", help="output directory")


def _load_config(args: argparse.Namespace) -> PipelineConfig:
    if getattr(args, "config", None):
        return PipelineConfig.from_json_file(args.config)
    return PipelineConfig()


def _write(outdir: str, name: str, obj: object) -> Path:
    path = Path(outdir) / name
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(canonical_json(obj) + "\n", encoding="utf-8")
    return path


def _corpus_dir(args: argparse.Namespace, cfg: PipelineConfig) -> str:
    directory = getattr(args, "dir", None) or cfg.corpus_dir
    if not directory:
        raise ConfigError("no corpus directory: pass --dir or set corpus_dir in the config")
    return directory


def _cmd_chunk(args: argparse.Namespace) -> None:
    cfg = _load_config(args)
    corpus = load_corpus(args.dir, cfg.include)
    chunks = []
    next_id = 0
    for f in corpus:
        toks = tokenize(f)
        for chunk in partition_chunks(f, toks, cfg.chunking, start_id=next_id):
            chunks.append(
                {
                    "id": chunk.id,
                    "file": chunk.file,
                    "token_range": list(chunk.token_range),
                    "line_range": list(chunk.line_range),
                    "length": chunk.length,
                }
            )
            next_id = chunk.id + 1
    path = _write(args.out, "chunks.json", {"chunks": chunks})
    print(path)


def _cmd_cpg(args: argparse.Namespace) -> None:
    cfg = _load_config(args)
    target = str(Path(args.file))
    if args.dir:
        corpus = load_corpus(args.dir, cfg.include)
    else:
        corpus = [load_source(target)]
    docs = []
    next_id = 0
    for f in corpus:
        toks = tokenize(f)
        for chunk in partition_chunks(f, toks, cfg.chunking, start_id=next_id):
            next_id = chunk.id + 1
            if f.path != target:
                continue
            ast = parse_subset(chunk, toks)
            docs.append(json.loads(export_cpg_json(build_cpg(ast, chunk, toks))))
    if not docs:
        raise ParameterError(f"{target}: no chunks produced (is it under --dir?)")
    path = _write(args.out, "cpg.json", docs)
    print(path)


def _cmd_score(args: argparse.Namespace) -> None:
    from . import scoring
    from .lexer import SourceFile
    from .pipeline import _make_scorer  # shared backend construction

    cfg = _load_config(args)
    corpus = load_corpus(_corpus_dir(args, cfg), cfg.include)
    if not corpus:
        raise ParameterError("corpus is empty")
    query_tokens = tokenize(SourceFile("<query>", args.query))
    prefix_tokens = (
        tokenize(SourceFile("<prefix>", cfg.prefix)) if cfg.prefix else []
    )
    scorer = _make_scorer(cfg)
    scores = []
    next_id = 0
    for f in corpus:
        toks = tokenize(f)
        for chunk in partition_chunks(f, toks, cfg.chunking, start_id=next_id):
            next_id = chunk.id + 1
            value = scoring.score_chunk(scorer, prefix_tokens, chunk, query_tokens, toks)
            scores.append((chunk.id, value))
    k = min(cfg.selection.k, len(scores))
    selected = scoring.select_topk(scores, k)
    path = _write(
        args.out,
        "scores.json",
        {
            "scores": [{"chunk_id": cid, "ppl": value} for cid, value in scores],
            "selected": selected,
            "k": k,
        },
    )
    print(path)


def _cmd_compress(args: argparse.Namespace) -> None:
    cfg = _load_config(args)
    cfg = dataclasses.replace(
        cfg,
        allocation=dataclasses.replace(cfg.allocation, capacity_ratio=args.cap),
        selection=dataclasses.replace(cfg.selection, k=args.k),
    )
    query = args.query or cfg.query
    if not query:
        raise ConfigError("no query: pass --query or set query in the config")
    corpus = load_corpus(_corpus_dir(args, cfg), cfg.include)
    external = load_external_cpgs(cfg.external_cpg_file) if cfg.external_cpg_file else None
    plan, report = run_pipeline(corpus, query, cfg, external_cpgs=external)
    plan_path = _write(args.out, "plan.json", plan.to_dict())
    _write(args.out, "report.json", report.to_dict())
    print(plan_path)


def _cmd_evaluate(args: argparse.Namespace) -> None:
    cfg = _load_config(args)
    plan = CompressionPlan.from_json(Path(args.plan).read_text(encoding="utf-8"))
    directory = getattr(args, "dir", None) or cfg.corpus_dir
    external = load_external_cpgs(args.external_cpgs) if args.external_cpgs else {}
    cpgs: dict[int, Cpg] = {}
    for chunk_plan in plan.chunks:
        file_path = (
            str(Path(directory) / chunk_plan.file)
            if directory and not Path(chunk_plan.file).exists()
            else chunk_plan.file
        )
        src = load_source(file_path)
        src = dataclasses.replace(src, path=chunk_plan.file)
        toks = tokenize(src)
        start, end = chunk_plan.token_range
        if end > len(toks):
            raise ParameterError(
                f"{chunk_plan.file}: token range {chunk_plan.token_range} exceeds "
                f"current file ({len(toks)} tokens); source changed since planning?"
            )
        chunk = Chunk(
            id=chunk_plan.chunk_id,
            file=chunk_plan.file,
            token_range=(start, end),
            line_range=(toks[start].line, toks[end - 1].line),
            length=end - start,
        )
        if chunk.id in external:
            cpgs[chunk.id] = import_cpg_json(external[chunk.id], chunk)
        else:
            cpgs[chunk.id] = build_cpg(parse_subset(chunk, toks), chunk, toks)
    report = structure_score(plan, cpgs)
    doc = report.to_dict()
    doc["config_fingerprint"] = plan.config_fingerprint
    if len(plan.chunks) >= 1:
        # relevance-vs-structure agreement over the selected chunks
        doc["ranking_overlap_top20"] = topk_overlap_jaccard(
            [-c.ppl for c in plan.chunks], [c.sigma for c in plan.chunks], 0.2
        )
    if args.gold:
        doc.update(_gold_metrics(args.gold))
    path = _write(args.out, "report.json", doc)
    print(path)


def _gold_metrics(path: str) -> dict:
    gold_doc = json.loads(Path(path).read_text(encoding="utf-8"))
    metrics = set_metrics(set(gold_doc["predicted"]), set(gold_doc["gold"]))
    out = {
        "set_metrics": {
            "precision": metrics.precision,
            "recall": metrics.recall,
            "f1": metrics.f1,
            "jaccard": metrics.jaccard,
            "gold_empty": metrics.gold_empty,
        }
    }
    if "predicted_text" in gold_doc and "gold_text" in gold_doc:
        out["edit_distance"] = normalized_edit_distance(
            gold_doc["predicted_text"], gold_doc["gold_text"]
        )
    return out


def _cmd_pipeline(args: argparse.Namespace) -> None:
    cfg = PipelineConfig.from_json_file(args.config)
    if not cfg.corpus_dir:
        raise ConfigError("config must set corpus_dir")
    if not cfg.query:
        raise ConfigError("config must set query")
    corpus = load_corpus(cfg.corpus_dir, cfg.include)
    external = load_external_cpgs(cfg.external_cpg_file) if cfg.external_cpg_file else None
    plan, report = run_pipeline(corpus, cfg.query, cfg, external_cpgs=external)
    plan_path = _write(args.out, "plan.json", plan.to_dict())
    _write(args.out, "report.json", report.to_dict())
    print(plan_path)


if __name__ == "__main__":
    sys.exit(main())
