"""Retention and overlap metrics over compression plans.

The headline number is the structure score: the fraction of
graph-critical tokens a plan keeps, averaged uniformly over every
(layer, chunk) pair that has critical tokens at all. Set-overlap and
edit-distance helpers back the evaluation report.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import kernels
from .cpg import Cpg, NodeKind
from .errors import ParameterError
from .plan import CompressionPlan

CATEGORIES = tuple(k.value for k in NodeKind)


@dataclass(frozen=True)
class RetentionReport:
    structure_score: float
    per_category_retention: dict[str, float]
    per_layer: dict[int, float]
    pairs_counted: int

    def to_dict(self) -> dict:
        return {
            "structure_score": self.structure_score,
            "per_category_retention": dict(sorted(self.per_category_retention.items())),
            "per_layer": {str(k): v for k, v in sorted(self.per_layer.items())},
            "pairs_counted": self.pairs_counted,
        }


@dataclass(frozen=True)
class SetMetrics:
    precision: float
    recall: float
    f1: float
    jaccard: float
    gold_empty: bool = False


def _critical_tokens(cpg: Cpg, category: str | None = None) -> set[int]:
    out: set[int] = set()
    for node in cpg.nodes:
        if category is not None and node.kind.value != category:
            continue
        out.update(range(*node.token_range))
    return out


def _pair_retentions(
    plan: CompressionPlan, cpgs: dict[int, Cpg], category: str | None
) -> list[tuple[int, float]]:
    """(layer, retention) for every (layer, chunk) pair with critical tokens."""
    pairs: list[tuple[int, float]] = []
    for chunk in plan.chunks:
        cpg = cpgs.get(chunk.chunk_id)
        if cpg is None:
            continue
        critical = _critical_tokens(cpg, category)
        if not critical:
            continue
        for layer_plan in chunk.layers:
            kept = set(layer_plan.kept)
            pairs.append((layer_plan.layer, len(critical & kept) / len(critical)))
    return pairs


def structure_score(plan: CompressionPlan, cpgs: dict[int, Cpg]) -> RetentionReport:
    pairs = _pair_retentions(plan, cpgs, category=None)
    overall = sum(r for _, r in pairs) / len(pairs) if pairs else 0.0
    per_layer: dict[int, float] = {}
    for layer in sorted({l for l, _ in pairs}):
        values = [r for l, r in pairs if l == layer]
        per_layer[layer] = sum(values) / len(values)
    per_category: dict[str, float] = {}
    for category in CATEGORIES:
        value = category_retention(plan, cpgs, category)
        if value is not None:
            per_category[category] = value
    return RetentionReport(
        structure_score=overall,
        per_category_retention=per_category,
        per_layer=per_layer,
        pairs_counted=len(pairs),
    )


def category_retention(
    plan: CompressionPlan, cpgs: dict[int, Cpg], category: str
) -> float | None:
    """Retention restricted to one node kind; None when the kind is absent."""
    if category not in CATEGORIES:
        raise ParameterError(f"unknown category {category!r}")
    pairs = _pair_retentions(plan, cpgs, category=category)
    if not pairs:
        return None
    return sum(r for _, r in pairs) / len(pairs)


def topk_overlap_jaccard(
    scores_a: Sequence[float], scores_b: Sequence[float], fraction: float
) -> float:
    """Jaccard overlap of the two top-fraction index sets.

    Higher scores rank higher in both lists; negate perplexities before
    calling. Rank ties break toward the smaller index.
    """
    if len(scores_a) == 0 or len(scores_b) == 0:
        raise ParameterError("score lists must be non-empty")
    if len(scores_a) != len(scores_b):
        raise ParameterError("score lists must be aligned")
    if not (0.0 < fraction <= 1.0):
        raise ParameterError(f"fraction must be in (0, 1], got {fraction}")
    n = len(scores_a)
    m = math.ceil(fraction * n)

    def top_ids(scores: Sequence[float]) -> set[int]:
        ranked = sorted(range(n), key=lambda i: (-scores[i], i))
        return set(ranked[:m])

    a = top_ids(scores_a)
    b = top_ids(scores_b)
    return len(a & b) / len(a | b)


def set_metrics(predicted: set, gold: set) -> SetMetrics:
    if not predicted and not gold:
        return SetMetrics(1.0, 1.0, 1.0, 1.0, gold_empty=True)
    inter = len(predicted & gold)
    precision = inter / len(predicted) if predicted else 0.0
    recall = inter / len(gold) if gold else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    jaccard = inter / len(predicted | gold)
    return SetMetrics(precision, recall, f1, jaccard, gold_empty=not gold)


def normalized_edit_distance(a: Sequence, b: Sequence) -> float:
    """Levenshtein distance over sequence elements divided by the longer
    length. Strings compare character-wise; pass token lists for
    token-level distance."""
    if len(a) == 0 and len(b) == 0:
        return 0.0
    table: dict = {}
    ca = _codes(a, table)
    cb = _codes(b, table)
    distance = kernels.levenshtein(ca, cb)
    return distance / max(len(a), len(b))


def _codes(seq: Sequence, table: dict) -> np.ndarray:
    out = np.empty(len(seq), dtype=np.int64)
    for i, item in enumerate(seq):
        out[i] = table.setdefault(item, len(table))
    return out
