import dataclasses
from pathlib import Path

import pytest

from structkv.allocation import AllocationConfig
from structkv.chunking import Chunk, ChunkConfig
from structkv.config import PipelineConfig, SelectionConfig
from structkv.cpg import build_cpg, export_cpg_json
from structkv.errors import ConfigError, ParameterError, ScoringError
from structkv.lexer import SourceFile, tokenize
from structkv.parsing import parse_subset
from structkv.chunking import partition_chunks
from structkv.pipeline import (
    assign_scoring_positions,
    query_position,
    run_pipeline,
)
from synth import synth_corpus, synth_query

GOLDEN_FILES = [
    SourceFile(
        "alpha.py",
        "def read_config(path):\n    raw = load(path)\n    cfg = parse(raw)\n"
        "    if cfg:\n        return cfg\n    return None\n",
    ),
    SourceFile(
        "beta.py",
        "def transform(data):\n    out = init()\n    for item in data:\n"
        "        out = push(out, item)\n    return out\n",
    ),
    SourceFile(
        "gamma.py",
        "def unrelated(n):\n    t = n * 2\n    while t > 0:\n"
        "        t = t - 3\n    return t\n",
    ),
]
GOLDEN_QUERY = "why does parse of raw config fail"


def golden_config(**overrides):
    cfg = PipelineConfig(
        chunking=ChunkConfig(min_chunk_tokens=4, target_chunk_tokens=512, max_chunk_tokens=4096),
        allocation=AllocationConfig(capacity_ratio=0.4),
        selection=SelectionConfig(k=2, layers=2),
        seed=7,
    )
    return dataclasses.replace(cfg, **overrides) if overrides else cfg


class TestPositions:
    def test_contiguous_from_zero(self):
        c = Chunk(0, "f", (0, 5), (1, 1), 5)
        assert list(assign_scoring_positions(0, c)) == [0, 1, 2, 3, 4]

    def test_offset_by_prefix(self):
        c = Chunk(0, "f", (0, 5), (1, 1), 5)
        assert list(assign_scoring_positions(3, c)) == [3, 4, 5, 6, 7]

    def test_independent_chunks_overlap(self):
        a = Chunk(0, "f", (0, 5), (1, 1), 5)
        b = Chunk(1, "f", (5, 12), (1, 1), 7)
        ra = assign_scoring_positions(3, a)
        rb = assign_scoring_positions(3, b)
        assert (ra.start, ra.stop - 1) == (3, 7)
        assert (rb.start, rb.stop - 1) == (3, 9)

    def test_negative_prefix_rejected(self):
        with pytest.raises(ParameterError):
            assign_scoring_positions(-1, Chunk(0, "f", (0, 5), (1, 1), 5))


class TestQueryPosition:
    def test_formula(self):
        assert query_position(5, [10, 20]) == 25

    def test_zero_prefix(self):
        assert query_position(0, [7]) == 7

    def test_empty_lengths_convention(self):
        assert query_position(4, []) == 4
        assert query_position(0, []) == 0


class TestRunPipeline:
    def test_full_budget_is_identity(self):
        files = [GOLDEN_FILES[0]]
        cfg = golden_config(
            allocation=AllocationConfig(capacity_ratio=1.0),
            selection=SelectionConfig(k=1, layers=2),
        )
        plan, report = run_pipeline(files, GOLDEN_QUERY, cfg)
        (chunk,) = plan.chunks
        for layer in chunk.layers:
            assert list(layer.kept) == list(range(chunk.length))
        assert report.structure_score == 1.0

    def test_zero_ratio_rejected(self):
        with pytest.raises(ConfigError):
            AllocationConfig(capacity_ratio=0.0)

    def test_empty_corpus_rejected(self):
        with pytest.raises(ParameterError):
            run_pipeline([], "q", golden_config())

    def test_duplicate_paths_rejected(self):
        files = [GOLDEN_FILES[0], GOLDEN_FILES[0]]
        with pytest.raises(ParameterError):
            run_pipeline(files, GOLDEN_QUERY, golden_config())

    def test_golden_fixture(self):
        plan, _ = run_pipeline(GOLDEN_FILES, GOLDEN_QUERY, golden_config())
        expected = Path(__file__).parent / "data" / "golden_plan.json"
        assert plan.to_json() + "\n" == expected.read_text(encoding="utf-8")

    def test_determinism_across_workers_and_runs(self):
        texts = set()
        for workers in (1, 8):
            for _ in range(3):
                plan, _ = run_pipeline(
                    GOLDEN_FILES, GOLDEN_QUERY, golden_config(workers=workers)
                )
                texts.add(plan.to_json())
        assert len(texts) == 1

    def test_kept_indices_map_to_valid_positions(self):
        corpus = synth_corpus(seed=3, n_files=6)
        cfg = golden_config(
            selection=SelectionConfig(k=4, layers=3),
            prefix="system preamble with instructions",
        )
        plan, _ = run_pipeline(corpus, synth_query(3, corpus), cfg)
        assert plan.prefix_len > 0
        for chunk in plan.chunks:
            for layer in chunk.layers:
                assert len(layer.kept) == min(chunk.budget, chunk.length)
                assert set(chunk.protected) <= set(layer.kept)
                for idx, pos in zip(layer.kept, layer.positions):
                    assert 0 <= idx < chunk.length
                    assert pos == plan.prefix_len + idx
                    assert pos < plan.query_start_position

    def test_query_position_exceeds_all_retained_positions(self):
        plan, _ = run_pipeline(GOLDEN_FILES, GOLDEN_QUERY, golden_config())
        top = max(
            pos for c in plan.chunks for l in c.layers for pos in l.positions
        )
        assert plan.query_start_position > top

    def test_scoring_failure_carries_chunk_id(self):
        cfg = golden_config(
            scorer=dataclasses.replace(golden_config().scorer, backend="http", url="http://127.0.0.1:9"),
        )
        cfg = dataclasses.replace(
            cfg, scorer=dataclasses.replace(cfg.scorer, retries=0, timeout_s=0.05)
        )
        with pytest.raises(ScoringError):
            run_pipeline(GOLDEN_FILES, GOLDEN_QUERY, cfg)

    def test_external_cpg_documents_override_builtin(self):
        # export the builtin graphs, relabel the files as external, feed the
        # documents back in: the plan must match the all-builtin run
        cfg = golden_config()
        baseline, _ = run_pipeline(GOLDEN_FILES, GOLDEN_QUERY, cfg)

        docs = {}
        next_id = 0
        for f in sorted(GOLDEN_FILES, key=lambda f: f.path):
            toks = tokenize(f)
            for chunk in partition_chunks(f, toks, cfg.chunking, start_id=next_id):
                next_id = chunk.id + 1
                ast = parse_subset(chunk, toks)
                docs[chunk.id] = export_cpg_json(build_cpg(ast, chunk, toks))

        external_files = [
            dataclasses.replace(f, language_tag="external") for f in GOLDEN_FILES
        ]
        plan, _ = run_pipeline(external_files, GOLDEN_QUERY, cfg, external_cpgs=docs)
        assert plan.to_json() == baseline.to_json()

    def test_external_file_without_document_degrades_to_attention_only(self):
        external_files = [
            dataclasses.replace(f, language_tag="external") for f in GOLDEN_FILES
        ]
        plan, report = run_pipeline(external_files, GOLDEN_QUERY, golden_config())
        for chunk in plan.chunks:
            assert chunk.sigma == 0.0
            assert chunk.protected == ()
        assert report.pairs_counted == 0

    def test_mock_seed_changes_plan(self):
        a, _ = run_pipeline(GOLDEN_FILES, GOLDEN_QUERY, golden_config(seed=7))
        b, _ = run_pipeline(GOLDEN_FILES, GOLDEN_QUERY, golden_config(seed=8))
        assert a.to_json() != b.to_json()

    def test_span_protection_disable_flag(self):
        cfg = golden_config()
        cfg = dataclasses.replace(cfg, span=dataclasses.replace(cfg.span, enabled=False))
        plan, _ = run_pipeline(GOLDEN_FILES, GOLDEN_QUERY, cfg)
        for chunk in plan.chunks:
            assert chunk.spans == () and chunk.protected == ()
