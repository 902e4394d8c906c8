"""Observation-window attention importance and per-layer residual selection.

Importance is the column mass of the row-softmaxed scaled score matrix
between the trailing query block and the chunk's key block. A sliding mean
smooths it, and the top residual tokens fill whatever budget span
protection left open. Backends produce the Q/K blocks; the mock backend
derives them from a seeded generator so desk-scale runs are reproducible
without a model.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import requests

from . import kernels
from .errors import BackendError, NumericError, ParameterError


@dataclass(frozen=True)
class AttentionWindow:
    q_block: np.ndarray  # (W, d)
    k_block: np.ndarray  # (L_c, d)
    layer: int


@dataclass(frozen=True)
class LayerKeepSet:
    layer: int
    kept: tuple[int, ...]  # ascending chunk-local indices


def importance(window: AttentionWindow) -> np.ndarray:
    """Per-context-token attention mass; entries sum to the window height."""
    q = np.ascontiguousarray(window.q_block, dtype=np.float64)
    k = np.ascontiguousarray(window.k_block, dtype=np.float64)
    if q.ndim != 2 or k.ndim != 2:
        raise ParameterError("q and k blocks must be 2-D matrices")
    if q.shape[0] < 1 or k.shape[0] < 1 or q.shape[1] < 1:
        raise ParameterError("q and k blocks must be non-empty")
    if q.shape[1] != k.shape[1]:
        raise ParameterError(
            f"q and k width mismatch: {q.shape[1]} vs {k.shape[1]}"
        )
    if not (np.isfinite(q).all() and np.isfinite(k).all()):
        raise NumericError("attention blocks must be finite")
    return kernels.attention_mass(q, k)


def pool(u: np.ndarray, window: int) -> np.ndarray:
    """Sliding average; the window shrinks at the edges instead of padding."""
    if window < 1 or window % 2 == 0:
        raise ParameterError(f"pooling window must be odd and >= 1, got {window}")
    u = np.ascontiguousarray(u, dtype=np.float64)
    if window == 1:
        return u.copy()
    return kernels.sliding_mean(u, window)


def select_tokens(
    u_pooled: np.ndarray, protected: list[int], b: int, layer: int
) -> LayerKeepSet:
    """Protected tokens plus the highest-importance residuals, up to ``b``.

    Ties in importance break toward the smaller index; the keep set is
    returned in ascending index order and has exactly min(b, L_c) entries.
    """
    length = int(u_pooled.shape[0])
    if len(protected) > b:
        raise ParameterError(
            f"{len(protected)} protected tokens exceed budget {b}"
        )
    keep_count = min(b, length)
    protected_set = set(protected)
    residual = keep_count - len(protected_set)
    if residual > 0:
        candidates = sorted(
            (i for i in range(length) if i not in protected_set),
            key=lambda i: (-u_pooled[i], i),
        )
        kept = sorted(protected_set.union(candidates[:residual]))
    else:
        kept = sorted(protected_set)
    return LayerKeepSet(layer=layer, kept=tuple(kept))


class MockAttentionBackend:
    """Seeded Gaussian Q/K blocks; the generator seed is
    corpus_seed XOR chunk_id XOR layer, so every (chunk, layer) pair is
    reproducible in isolation."""

    def __init__(self, seed: int, window: int = 128, dim: int = 32):
        if window < 1 or dim < 1:
            raise ParameterError("window and dim must be positive")
        self.seed = seed
        self.window = window
        self.dim = dim

    def attention_window(self, chunk_id: int, layer: int, length: int) -> AttentionWindow:
        rng = np.random.default_rng(self.seed ^ chunk_id ^ layer)
        q = rng.standard_normal((self.window, self.dim))
        k = rng.standard_normal((length, self.dim))
        return AttentionWindow(q_block=q, k_block=k, layer=layer)


class HttpAttentionBackend:
    """Fetches Q/K blocks through the POST /attention wire contract."""

    def __init__(self, base_url: str, timeout_s: float = 30.0, retries: int = 2):
        self.base_url = base_url.rstrip("/")
        self.timeout_s = timeout_s
        self.retries = retries

    def attention_window(self, chunk_id: int, layer: int, length: int) -> AttentionWindow:
        payload = {"chunk_id": chunk_id, "layer": layer}
        last_error: Exception | None = None
        for _ in range(self.retries + 1):
            try:
                resp = requests.post(
                    f"{self.base_url}/attention", json=payload, timeout=self.timeout_s
                )
                resp.raise_for_status()
                doc = resp.json()
                q = np.asarray(doc["q"], dtype=np.float64)
                k = np.asarray(doc["k"], dtype=np.float64)
                if k.ndim != 2 or k.shape[0] != length:
                    raise ValueError(
                        f"backend returned {k.shape[0] if k.ndim == 2 else '?'} key rows "
                        f"for a {length}-token chunk"
                    )
                return AttentionWindow(q_block=q, k_block=k, layer=layer)
            except (requests.RequestException, KeyError, ValueError, TypeError) as exc:
                last_error = exc
        raise BackendError(chunk_id, layer, str(last_error))
