"""Compression plan records and their canonical JSON form.

A plan is the product of the engine: per selected chunk it lists the
budget, span provenance, the per-layer kept token indices, and the
original position index of every kept token. Canonical serialization
(sorted keys, minimal separators) makes plans byte-comparable across
runs and worker counts.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass


def canonical_json(obj: object) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def fingerprint(obj: object) -> str:
    return hashlib.sha256(canonical_json(obj).encode("utf-8")).hexdigest()[:16]


@dataclass(frozen=True)
class SpanRecord:
    anchor_node: int
    stage: int
    score: float
    token_range: tuple[int, int]


@dataclass(frozen=True)
class LayerPlan:
    layer: int
    kept: tuple[int, ...]  # ascending chunk-local indices
    positions: tuple[int, ...]  # original position index per kept token


@dataclass(frozen=True)
class ChunkPlan:
    chunk_id: int
    file: str
    token_range: tuple[int, int]
    length: int  # pre-compression token count
    ppl: float
    sigma: float
    normalized_score: float
    multiplier: float
    budget: int
    span_budget: int
    spans: tuple[SpanRecord, ...]
    protected: tuple[int, ...]
    layers: tuple[LayerPlan, ...]


@dataclass(frozen=True)
class CompressionPlan:
    chunks: tuple[ChunkPlan, ...]
    prefix_len: int
    query_len: int
    query_start_position: int
    layer_count: int
    seed: int
    config_fingerprint: str

    def to_dict(self) -> dict:
        return {
            "chunks": [
                {
                    "chunk_id": c.chunk_id,
                    "file": c.file,
                    "token_range": list(c.token_range),
                    "length": c.length,
                    "ppl": c.ppl,
                    "sigma": c.sigma,
                    "normalized_score": c.normalized_score,
                    "multiplier": c.multiplier,
                    "budget": c.budget,
                    "span_budget": c.span_budget,
                    "spans": [
                        {
                            "anchor_node": s.anchor_node,
                            "stage": s.stage,
                            "score": s.score,
                            "token_range": list(s.token_range),
                        }
                        for s in c.spans
                    ],
                    "protected": list(c.protected),
                    "layers": [
                        {
                            "layer": l.layer,
                            "kept": list(l.kept),
                            "positions": list(l.positions),
                        }
                        for l in c.layers
                    ],
                }
                for c in self.chunks
            ],
            "prefix_len": self.prefix_len,
            "query_len": self.query_len,
            "query_start_position": self.query_start_position,
            "layer_count": self.layer_count,
            "seed": self.seed,
            "config_fingerprint": self.config_fingerprint,
        }

    def to_json(self) -> str:
        return canonical_json(self.to_dict())

    @classmethod
    def from_dict(cls, doc: dict) -> "CompressionPlan":
        chunks = tuple(
            ChunkPlan(
                chunk_id=c["chunk_id"],
                file=c["file"],
                token_range=tuple(c["token_range"]),
                length=c["length"],
                ppl=c["ppl"],
                sigma=c["sigma"],
                normalized_score=c["normalized_score"],
                multiplier=c["multiplier"],
                budget=c["budget"],
                span_budget=c["span_budget"],
                spans=tuple(
                    SpanRecord(
                        anchor_node=s["anchor_node"],
                        stage=s["stage"],
                        score=s["score"],
                        token_range=tuple(s["token_range"]),
                    )
                    for s in c["spans"]
                ),
                protected=tuple(c["protected"]),
                layers=tuple(
                    LayerPlan(
                        layer=l["layer"],
                        kept=tuple(l["kept"]),
                        positions=tuple(l["positions"]),
                    )
                    for l in c["layers"]
                ),
            )
            for c in doc["chunks"]
        )
        return cls(
            chunks=chunks,
            prefix_len=doc["prefix_len"],
            query_len=doc["query_len"],
            query_start_position=doc["query_start_position"],
            layer_count=doc["layer_count"],
            seed=doc["seed"],
            config_fingerprint=doc["config_fingerprint"],
        )

    @classmethod
    def from_json(cls, text: str) -> "CompressionPlan":
        return cls.from_dict(json.loads(text))
