"""Candidate tool-pool construction for training examples.

Each example gets a 30-tool pool: every tool the trajectory actually called,
then half of the remaining slots filled with the semantically closest tools
(max cosine similarity to any called tool), then uniform random fill from
the rest of the catalog. Embeddings come from a pluggable client and are
cached on disk keyed by a content hash of "{name}: {description}".
"""
from __future__ import annotations

import hashlib
import json
import logging
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Optional, Protocol, Sequence, Set, Union

import numpy as np

from .model import ToolSpec, ValidationError

log = logging.getLogger(__name__)

DEFAULT_POOL_SIZE = 30
DEFAULT_SIMILAR_FRACTION = 0.5


class EmbeddingClient(Protocol):
    def embed(self, texts: Sequence[str]) -> list[np.ndarray]: ...


class HashingEmbeddingClient:
    """Deterministic stand-in for a real embedding service: unit vectors
    seeded by a content hash. Texts sharing a prefix get correlated vectors
    only by chance, which is fine for pool-construction tests."""

    def __init__(self, dim: int = 64):
        self.dim = dim
        self.calls = 0

    def embed(self, texts: Sequence[str]) -> list[np.ndarray]:
        self.calls += 1
        out = []
        for text in texts:
            seed = int.from_bytes(
                hashlib.sha256(text.encode("utf-8")).digest()[:8], "big"
            )
            rng = np.random.default_rng(seed)
            v = rng.standard_normal(self.dim)
            out.append(v / np.linalg.norm(v))
        return out


@dataclass(frozen=True)
class ToolPool:
    """The per-example candidate tool set, partitioned by provenance."""

    example_id: str
    tools: tuple[str, ...]
    called: tuple[str, ...]
    similar: tuple[str, ...]
    random: tuple[str, ...]

    def __post_init__(self) -> None:
        parts = set(self.called) | set(self.similar) | set(self.random)
        if parts != set(self.tools):
            raise ValidationError("called/similar/random must partition the pool")
        if len(self.tools) != len(set(self.tools)):
            raise ValidationError("pool contains duplicate tools")

    def to_dict(self) -> dict:
        return {
            "example_id": self.example_id,
            "tools": list(self.tools),
            "called": list(self.called),
            "similar": list(self.similar),
            "random": list(self.random),
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "ToolPool":
        return cls(
            example_id=d["example_id"],
            tools=tuple(d["tools"]),
            called=tuple(d["called"]),
            similar=tuple(d["similar"]),
            random=tuple(d["random"]),
        )


def render_tool_text(spec: ToolSpec) -> str:
    return f"{spec.name}: {spec.description}"


def _content_hash(spec: ToolSpec) -> str:
    return hashlib.sha256(render_tool_text(spec).encode("utf-8")).hexdigest()


def _load_cache(path: Path) -> dict[str, tuple[str, np.ndarray]]:
    cache: dict[str, tuple[str, np.ndarray]] = {}
    if path.exists():
        with open(path, "r", encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    rec = json.loads(line)
                    cache[rec["name"]] = (rec["hash"], np.asarray(rec["vector"]))
    return cache


def _write_cache(path: Path, cache: Mapping[str, tuple[str, np.ndarray]]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        for name in sorted(cache):
            h, v = cache[name]
            fh.write(
                json.dumps({"name": name, "hash": h, "vector": v.tolist()}) + "\n"
            )


def embed_catalog(
    catalog: Sequence[ToolSpec],
    client: EmbeddingClient,
    cache_path: Optional[Union[str, Path]] = None,
) -> dict[str, np.ndarray]:
    """One vector per catalog tool. A warm cache (matching content hashes)
    avoids service calls entirely; on a service failure the partial cache is
    written before the error propagates."""
    names = [s.name for s in catalog]
    if len(names) != len(set(names)):
        raise ValidationError("catalog tool names must be unique")
    cache: dict[str, tuple[str, np.ndarray]] = {}
    if cache_path is not None:
        cache = _load_cache(Path(cache_path))

    vectors: dict[str, np.ndarray] = {}
    missing: list[ToolSpec] = []
    for spec in catalog:
        h = _content_hash(spec)
        hit = cache.get(spec.name)
        if hit is not None and hit[0] == h:
            vectors[spec.name] = hit[1]
        else:
            missing.append(spec)

    if missing:
        try:
            embedded = client.embed([render_tool_text(s) for s in missing])
        except Exception:
            if cache_path is not None:
                _write_cache(Path(cache_path), {n: (cache[n][0], v) for n, v in vectors.items() if n in cache})
            raise
        for spec, vec in zip(missing, embedded):
            vectors[spec.name] = np.asarray(vec)
        if cache_path is not None:
            _write_cache(
                Path(cache_path),
                {s.name: (_content_hash(s), vectors[s.name]) for s in catalog},
            )
    return vectors


def max_cosine_to_called(
    name: str,
    called: Iterable[str],
    vectors: Mapping[str, np.ndarray],
) -> float:
    v = vectors[name]
    return max(float(np.dot(v, vectors[c])) for c in called)


def build_pool(
    called: Set[str],
    catalog: Sequence[ToolSpec],
    vectors: Mapping[str, np.ndarray],
    seed: int,
    example_id: str = "",
    pool_size: int = DEFAULT_POOL_SIZE,
    similar_frac: float = DEFAULT_SIMILAR_FRACTION,
) -> ToolPool:
    """Deterministic pool: called tools, then floor(similar_frac * free)
    nearest neighbors by max cosine to the called set (ties broken
    lexicographically), then a seeded uniform sample of the rest."""
    names = [s.name for s in catalog]
    name_set = set(names)
    unknown = sorted(set(called) - name_set)
    if unknown:
        raise ValidationError(f"called tools missing from catalog: {unknown}")

    called_sorted = tuple(sorted(called))
    if len(called) > pool_size:
        log.warning(
            "example %s calls %d tools, exceeding pool size %d; pool is the called set",
            example_id, len(called), pool_size,
        )
        return ToolPool(example_id, called_sorted, called_sorted, (), ())

    target = min(pool_size, len(name_set))
    free = target - len(called)
    n_similar = int(free * similar_frac)

    similar: tuple[str, ...] = ()
    if called and n_similar > 0:
        candidates = sorted(name_set - set(called))
        ranked = sorted(
            candidates,
            key=lambda n: (-max_cosine_to_called(n, called, vectors), n),
        )
        similar = tuple(ranked[:n_similar])

    remaining = sorted(name_set - set(called) - set(similar))
    n_random = free - len(similar)
    rng = random.Random(seed)
    rand = tuple(rng.sample(remaining, n_random))

    tools = called_sorted + similar + rand
    return ToolPool(example_id, tools, called_sorted, similar, rand)
