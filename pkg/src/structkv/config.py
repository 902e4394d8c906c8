"""Aggregate engine configuration with JSON loading and validation."""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

from .allocation import AllocationConfig
from .chunking import ChunkConfig
from .errors import ConfigError
from .plan import fingerprint
from .spans import SpanConfig


@dataclass(frozen=True)
class ScorerConfig:
    backend: str = "mock"  # "mock" | "http"
    url: str | None = None
    timeout_s: float = 30.0
    retries: int = 2

    def __post_init__(self) -> None:
        if self.backend not in ("mock", "http"):
            raise ConfigError(f"unknown scorer backend {self.backend!r}")
        if self.backend == "http" and not self.url:
            raise ConfigError("http scorer backend requires a url")


@dataclass(frozen=True)
class AttentionConfig:
    backend: str = "mock"  # "mock" | "http"
    url: str | None = None
    timeout_s: float = 30.0
    retries: int = 2
    window: int = 128
    pool_window: int = 5
    dim: int = 32

    def __post_init__(self) -> None:
        if self.backend not in ("mock", "http"):
            raise ConfigError(f"unknown attention backend {self.backend!r}")
        if self.backend == "http" and not self.url:
            raise ConfigError("http attention backend requires a url")
        if self.window < 1 or self.dim < 1:
            raise ConfigError("attention window and dim must be positive")
        if self.pool_window < 1 or self.pool_window % 2 == 0:
            raise ConfigError(f"pool_window must be odd, got {self.pool_window}")


@dataclass(frozen=True)
class SelectionConfig:
    k: int = 6
    layers: int = 4

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ConfigError(f"k must be positive, got {self.k}")
        if self.layers < 1:
            raise ConfigError(f"layers must be positive, got {self.layers}")


@dataclass(frozen=True)
class PipelineConfig:
    chunking: ChunkConfig = field(default_factory=ChunkConfig)
    allocation: AllocationConfig = field(default_factory=AllocationConfig)
    span: SpanConfig = field(default_factory=SpanConfig)
    attention: AttentionConfig = field(default_factory=AttentionConfig)
    scorer: ScorerConfig = field(default_factory=ScorerConfig)
    selection: SelectionConfig = field(default_factory=SelectionConfig)
    seed: int = 0
    workers: int = 1
    prefix: str = ""
    corpus_dir: str | None = None
    query: str | None = None
    include: tuple[str, ...] = ("**/*.py",)
    external_cpg_file: str | None = None

    def __post_init__(self) -> None:
        if self.workers < 1:
            raise ConfigError(f"workers must be positive, got {self.workers}")
        if self.seed < 0:
            raise ConfigError(f"seed must be non-negative, got {self.seed}")

    def fingerprint(self) -> str:
        """Hash of every knob that shapes the plan (paths excluded)."""
        core = self.to_dict()
        for key in ("corpus_dir", "external_cpg_file", "workers"):
            core.pop(key, None)
        return fingerprint(core)

    def to_dict(self) -> dict:
        out = dataclasses.asdict(self)
        out["include"] = list(self.include)
        return out

    @classmethod
    def from_dict(cls, doc: dict) -> "PipelineConfig":
        if not isinstance(doc, dict):
            raise ConfigError("config must be a JSON object")
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(doc) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        kwargs: dict = {}
        sub = {
            "chunking": ChunkConfig,
            "allocation": AllocationConfig,
            "span": SpanConfig,
            "attention": AttentionConfig,
            "scorer": ScorerConfig,
            "selection": SelectionConfig,
        }
        for key, value in doc.items():
            if key in sub:
                kwargs[key] = _build(sub[key], value, key)
            elif key == "include":
                kwargs[key] = tuple(value)
            else:
                kwargs[key] = value
        return cls(**kwargs)

    @classmethod
    def from_json_file(cls, path: str | Path) -> "PipelineConfig":
        try:
            doc = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
        except OSError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
        return cls.from_dict(doc)


def _build(cls: type, data: object, name: str):
    if isinstance(data, cls):
        return data
    if not isinstance(data, dict):
        raise ConfigError(f"config section {name!r} must be an object")
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown keys in {name!r}: {sorted(unknown)}")
    try:
        return cls(**data)
    except TypeError as exc:
        raise ConfigError(f"invalid {name!r} section: {exc}") from exc
