"""End-to-end planning: selection, graph analysis, allocation, protection,
per-layer attention selection, and position assembly.

The pipeline is deterministic for a fixed (corpus, query, config, seed):
per-chunk work fans out to a thread pool, results are assembled in chunk-id
order, and the emitted plan is canonical JSON, so worker count never
changes a byte of output.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Sequence

from . import allocation as alloc
from . import attention as attn
from . import metrics as metrics_mod
from . import scoring
from . import spans as spans_mod
from .chunking import Chunk, partition_chunks
from .config import PipelineConfig
from .cpg import Cpg, build_cpg, import_cpg_json
from .errors import ConfigError, ParameterError, SchemaError
from .lexer import SourceFile, Token, load_source, tokenize
from .metrics import RetentionReport
from .parsing import parse_subset
from .plan import ChunkPlan, CompressionPlan, LayerPlan, SpanRecord


def assign_scoring_positions(prefix_len: int, chunk: Chunk) -> range:
    """Positions of the chunk inside its [prefix; chunk; query] scoring input.

    Chunks are scored independently, so ranges from different chunks may
    overlap; that is intentional.
    """
    if prefix_len < 0:
        raise ParameterError(f"prefix length must be non-negative, got {prefix_len}")
    return range(prefix_len, prefix_len + chunk.length)


def query_position(prefix_len: int, chunk_lengths: Sequence[int]) -> int:
    """First query position: past the longest pre-compression chunk."""
    if prefix_len < 0:
        raise ParameterError(f"prefix length must be non-negative, got {prefix_len}")
    return prefix_len + (max(chunk_lengths) if chunk_lengths else 0)


def load_corpus(directory: str | Path, include: Sequence[str] = ("**/*.py",)) -> list[SourceFile]:
    """Source files under a directory, sorted by path for determinism."""
    root = Path(directory)
    paths: set[Path] = set()
    for pattern in include:
        paths.update(p for p in root.glob(pattern) if p.is_file())
    return [load_source(p) for p in sorted(paths)]


def _as_query_tokens(query: str | Sequence[Token]) -> list[Token]:
    if isinstance(query, str):
        return tokenize(SourceFile(path="<query>", content=query))
    return list(query)


def run_pipeline(
    corpus: Sequence[SourceFile],
    query: str | Sequence[Token],
    cfg: PipelineConfig,
    external_cpgs: dict[int, str | bytes] | None = None,
) -> tuple[CompressionPlan, RetentionReport]:
    """Produce a compression plan and its retention report.

    ``external_cpgs`` maps chunk ids to interchange documents; chunks with
    a document use it instead of the built-in analyzer, and chunks of
    non-subset files without one get an empty graph (attention-only).
    """
    if not corpus:
        raise ParameterError("corpus must be non-empty")
    files = sorted(corpus, key=lambda f: f.path)
    seen: set[str] = set()
    for f in files:
        if f.path in seen:
            raise ParameterError(f"duplicate path in corpus: {f.path}")
        seen.add(f.path)

    query_tokens = _as_query_tokens(query)
    if not query_tokens:
        raise ParameterError("query must produce at least one token")
    prefix_tokens = (
        tokenize(SourceFile(path="<prefix>", content=cfg.prefix)) if cfg.prefix else []
    )
    prefix_len = len(prefix_tokens)

    file_tokens: dict[str, list[Token]] = {}
    chunks: list[Chunk] = []
    chunk_file: dict[int, SourceFile] = {}
    next_id = 0
    for f in files:
        toks = tokenize(f)
        file_tokens[f.path] = toks
        for chunk in partition_chunks(f, toks, cfg.chunking, start_id=next_id):
            chunks.append(chunk)
            chunk_file[chunk.id] = f
            next_id = chunk.id + 1
    if not chunks:
        raise ParameterError("corpus produced no chunks")

    scorer = _make_scorer(cfg)

    def score_one(chunk: Chunk) -> tuple[int, float]:
        value = scoring.score_chunk(
            scorer, prefix_tokens, chunk, query_tokens, file_tokens[chunk.file]
        )
        return (chunk.id, value)

    scores = _map(score_one, chunks, cfg.workers)
    scores.sort(key=lambda item: item[0])
    k = min(cfg.selection.k, len(scores))
    selected_ids = set(scoring.select_topk(scores, k))
    ppl_by_id = dict(scores)
    selected = [c for c in chunks if c.id in selected_ids]

    docs = external_cpgs or {}

    def analyze_one(chunk: Chunk) -> tuple[int, Cpg]:
        src = chunk_file[chunk.id]
        if chunk.id in docs:
            return chunk.id, import_cpg_json(docs[chunk.id], chunk)
        if src.language_tag == "subset_py":
            ast = parse_subset(chunk, file_tokens[src.path])
            return chunk.id, build_cpg(ast, chunk, file_tokens[src.path])
        return chunk.id, Cpg(nodes=(), edges=(), chunk_id=chunk.id)

    cpgs = dict(_map(analyze_one, selected, cfg.workers))

    sigmas = [
        scoring.structural_score(scoring.extract_features(c, cpgs[c.id]))
        for c in selected
    ]
    normalized = alloc.normalize_scores(sigmas, cfg.allocation) if sigmas else []
    multipliers = [alloc.multiplier(s, cfg.allocation) for s in normalized]
    budgets = [alloc.budget(c.length, m, cfg.allocation) for c, m in zip(selected, multipliers)]

    backend = _make_attention_backend(cfg)
    query_syms = scoring.query_symbols(query_tokens)

    def compress_one(args: tuple[Chunk, float, float, float, int]) -> ChunkPlan:
        chunk, sigma, norm, mult, chunk_budget = args
        toks = file_tokens[chunk.file]
        if cfg.span.enabled:
            candidates = spans_mod.build_spans(chunk, cpgs[chunk.id], cfg.span, toks)
            span_scores = [
                spans_mod.score_span(z, cfg.span)
                + cfg.span.weights["query"] * spans_mod.query_protection(z, query_syms)
                for z in candidates
            ]
            protections = [spans_mod.query_protection(z, query_syms) for z in candidates]
            b_span = spans_mod.span_budget(chunk_budget, cfg.span)
            selections = spans_mod.select_spans(candidates, span_scores, protections, b_span)
            chosen = [candidates[s.index] for s in selections]
            protected = spans_mod.protect_tokens(chosen, chunk_budget, chunk)
            span_records = tuple(
                SpanRecord(
                    anchor_node=candidates[s.index].anchor_node,
                    stage=s.stage,
                    score=span_scores[s.index],
                    token_range=candidates[s.index].token_range,
                )
                for s in selections
            )
        else:
            b_span = 0
            protected = []
            span_records = ()

        position_base = assign_scoring_positions(prefix_len, chunk).start
        layer_plans = []
        for layer in range(cfg.selection.layers):
            window = backend.attention_window(chunk.id, layer, chunk.length)
            u = attn.importance(window)
            u_pooled = attn.pool(u, cfg.attention.pool_window)
            keep = attn.select_tokens(u_pooled, protected, chunk_budget, layer)
            layer_plans.append(
                LayerPlan(
                    layer=layer,
                    kept=keep.kept,
                    positions=tuple(position_base + i for i in keep.kept),
                )
            )
        return ChunkPlan(
            chunk_id=chunk.id,
            file=chunk.file,
            token_range=chunk.token_range,
            length=chunk.length,
            ppl=ppl_by_id[chunk.id],
            sigma=sigma,
            normalized_score=norm,
            multiplier=mult,
            budget=chunk_budget,
            span_budget=b_span,
            spans=span_records,
            protected=tuple(protected),
            layers=tuple(layer_plans),
        )

    work = list(zip(selected, sigmas, normalized, multipliers, budgets))
    chunk_plans = _map(compress_one, work, cfg.workers)
    chunk_plans.sort(key=lambda cp: cp.chunk_id)

    plan = CompressionPlan(
        chunks=tuple(chunk_plans),
        prefix_len=prefix_len,
        query_len=len(query_tokens),
        query_start_position=query_position(prefix_len, [c.length for c in selected]),
        layer_count=cfg.selection.layers,
        seed=cfg.seed,
        config_fingerprint=cfg.fingerprint(),
    )
    report = metrics_mod.structure_score(plan, cpgs)
    return plan, report


def _map(fn, items, workers: int) -> list:
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _make_scorer(cfg: PipelineConfig):
    if cfg.scorer.backend == "mock":
        return scoring.MockScorer()
    return scoring.HttpScorer(cfg.scorer.url, cfg.scorer.timeout_s, cfg.scorer.retries)


def _make_attention_backend(cfg: PipelineConfig):
    if cfg.attention.backend == "mock":
        return attn.MockAttentionBackend(
            seed=cfg.seed, window=cfg.attention.window, dim=cfg.attention.dim
        )
    return attn.HttpAttentionBackend(
        cfg.attention.url, cfg.attention.timeout_s, cfg.attention.retries
    )


def load_external_cpgs(path: str | Path) -> dict[int, str]:
    """Read a sidecar file of interchange documents keyed by chunk id.

    The file holds a JSON array of per-chunk documents (the same schema
    the exporter emits); each document's chunk_id must match a chunk id
    produced by the `chunk` stage under the same chunking config.
    """
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: invalid JSON: {exc}") from exc
    except OSError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    if not isinstance(doc, list):
        raise SchemaError(f"{path}: expected a JSON array of graph documents")
    out: dict[int, str] = {}
    for item in doc:
        if not isinstance(item, dict) or not isinstance(item.get("chunk_id"), int):
            raise SchemaError(f"{path}: every document needs an integer chunk_id")
        out[item["chunk_id"]] = json.dumps(item)
    return out
