"""Span-level protection: carve structural spans out of a chunk, rank them,
hard-protect query-relevant ones, pack them under the span budget, and turn
the survivors into a protected token set.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field

from .chunking import Chunk, chunk_slice
from .cpg import Cpg, EdgeKind
from .errors import ConfigError
from .lexer import Token, TokenKind

INDICATOR_KINDS = ("call", "control", "return", "assign", "signature")

DEFAULT_SPAN_WEIGHTS = {
    "call": 0.20,
    "control": 0.18,
    "query": 0.18,
    "return": 0.14,
    "assign": 0.14,
    "signature": 0.0,
    "defuse": 0.10,
    "attention": 0.06,
}


@dataclass(frozen=True)
class SpanConfig:
    rho_span: float = 0.5
    b_min: int = 16
    min_span_tokens: int = 16
    merge_gap_lines: int = 1
    weights: dict[str, float] = field(default_factory=lambda: dict(DEFAULT_SPAN_WEIGHTS))
    enabled: bool = True

    def __post_init__(self) -> None:
        if not (0.0 < self.rho_span <= 1.0):
            raise ConfigError(f"rho_span must be in (0, 1], got {self.rho_span}")
        if self.b_min <= 0 or self.min_span_tokens <= 0:
            raise ConfigError("b_min and min_span_tokens must be positive")
        if self.merge_gap_lines < 0:
            raise ConfigError("merge_gap_lines must be non-negative")
        for key in DEFAULT_SPAN_WEIGHTS:
            if key not in self.weights:
                raise ConfigError(f"missing span weight {key!r}")
            if self.weights[key] < 0:
                raise ConfigError(f"span weight {key!r} must be non-negative")


@dataclass(frozen=True)
class StructuralSpan:
    anchor_node: int
    token_range: tuple[int, int]  # chunk-local, half-open
    indicators: frozenset[str]  # subset of INDICATOR_KINDS
    symbols: frozenset[str]
    line_range: tuple[int, int]
    participates_defuse: bool = False
    attention_feature: float = 0.0

    @property
    def width(self) -> int:
        return self.token_range[1] - self.token_range[0]


@dataclass(frozen=True)
class SpanSelection:
    index: int  # position in the candidate list
    stage: int  # 1 = hard-protected, 2 = score-ranked


def build_spans(
    chunk: Chunk, cpg: Cpg, cfg: SpanConfig, file_tokens: list[Token]
) -> list[StructuralSpan]:
    """One candidate per graph node, widened to the minimum span size and
    merged with near neighbors that share a structural indicator."""
    tokens = chunk_slice(file_tokens, chunk)
    length = len(tokens)
    if length == 0:
        return []
    defuse_nodes = {
        nid
        for e in cpg.edges
        if e.kind is EdgeKind.PDG
        for nid in (e.src, e.dst)
    }
    candidates = []
    for node in cpg.nodes:
        start, end = _widen(node.token_range, cfg.min_span_tokens, length)
        candidates.append(
            StructuralSpan(
                anchor_node=node.id,
                token_range=(start, end),
                indicators=frozenset({node.kind.value}),
                symbols=frozenset(
                    t.text for t in tokens[start:end] if t.kind is TokenKind.IDENTIFIER
                ),
                line_range=(tokens[start].line, tokens[end - 1].line),
                participates_defuse=node.id in defuse_nodes,
            )
        )
    candidates.sort(key=lambda z: (z.token_range, z.anchor_node))
    return _merge_spans(candidates, cfg.merge_gap_lines)


def _widen(span: tuple[int, int], min_tokens: int, length: int) -> tuple[int, int]:
    start, end = span
    need = min_tokens - (end - start)
    if need > 0:
        left = (need + 1) // 2  # preceding context gets the odd token
        start -= left
        end += need - left
    if start < 0:
        end -= start
        start = 0
    if end > length:
        start -= end - length
        end = length
    return (max(0, start), end)


def _merge_spans(spans: list[StructuralSpan], gap_lines: int) -> list[StructuralSpan]:
    merged: list[StructuralSpan] = []
    for span in spans:
        if merged:
            prev = merged[-1]
            gap = span.line_range[0] - prev.line_range[1]
            if gap <= gap_lines and (prev.indicators & span.indicators):
                merged[-1] = StructuralSpan(
                    anchor_node=prev.anchor_node,
                    token_range=(
                        prev.token_range[0],
                        max(prev.token_range[1], span.token_range[1]),
                    ),
                    indicators=prev.indicators | span.indicators,
                    symbols=prev.symbols | span.symbols,
                    line_range=(
                        prev.line_range[0],
                        max(prev.line_range[1], span.line_range[1]),
                    ),
                    participates_defuse=prev.participates_defuse or span.participates_defuse,
                    attention_feature=max(prev.attention_feature, span.attention_feature),
                )
                continue
        merged.append(span)
    return merged


def score_span(z: StructuralSpan, cfg: SpanConfig) -> float:
    w = cfg.weights
    total = sum(w[kind] for kind in z.indicators)
    if z.participates_defuse:
        total += w["defuse"]
    total += w["attention"] * z.attention_feature
    return total


def query_protection(z: StructuralSpan, query_syms: frozenset[str]) -> int:
    return 1 if z.symbols & query_syms else 0


def span_budget(b: int, cfg: SpanConfig) -> int:
    if b < 0:
        raise ConfigError(f"budget must be non-negative, got {b}")
    return min(b, max(cfg.b_min, math.floor(cfg.rho_span * b)))


def select_spans(
    spans: list[StructuralSpan],
    scores: list[float],
    protections: list[int],
    b_span: int,
) -> list[SpanSelection]:
    """Two-stage greedy packing under the span budget.

    Stage 1 takes hard-protected spans: query-matched spans first, then
    signatures, each in chunk order. Stage 2 ranks the rest by score.
    A span is taken only when its not-yet-covered width still fits, so
    overlapping tokens are charged once.
    """
    covered: set[int] = set()
    remaining = b_span
    taken: set[int] = set()
    out: list[SpanSelection] = []

    def try_take(i: int, stage: int) -> None:
        nonlocal remaining
        fresh = set(range(*spans[i].token_range)) - covered
        if len(fresh) <= remaining:
            covered.update(fresh)
            remaining -= len(fresh)
            taken.add(i)
            out.append(SpanSelection(i, stage))

    order = sorted(range(len(spans)), key=lambda i: (spans[i].token_range, i))
    for i in order:
        if protections[i]:
            try_take(i, stage=1)
    for i in order:
        if i not in taken and "signature" in spans[i].indicators:
            try_take(i, stage=1)
    for i in sorted(
        (i for i in range(len(spans)) if i not in taken),
        key=lambda i: (-scores[i], spans[i].token_range, i),
    ):
        try_take(i, stage=2)
    return out


def protect_tokens(
    selected: list[StructuralSpan], b: int, chunk: Chunk
) -> list[int]:
    """Token indices guaranteed to survive compression, at most ``b`` of them.

    The span union is kept whole when it fits; the rest of the budget is
    filled with the tokens nearest the protected region. When the union
    overflows, its first ``b`` indices in sequence order are kept.
    """
    protected: set[int] = set()
    for span in selected:
        protected.update(range(*span.token_range))
    ordered = sorted(protected)
    if len(ordered) >= b:
        return ordered[:b]
    if not ordered:
        return []
    result = set(ordered)
    outside = [i for i in range(chunk.length) if i not in result]
    outside.sort(key=lambda i: (_nearest_distance(ordered, i), i))
    for i in outside:
        if len(result) >= b:
            break
        result.add(i)
    return sorted(result)


def _nearest_distance(sorted_pts: list[int], i: int) -> int:
    pos = bisect.bisect_left(sorted_pts, i)
    best = None
    if pos < len(sorted_pts):
        best = sorted_pts[pos] - i
    if pos > 0:
        d = i - sorted_pts[pos - 1]
        best = d if best is None or d < best else best
    return best if best is not None else 0
