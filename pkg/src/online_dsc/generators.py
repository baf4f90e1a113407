"""Seeded instance generators.

Every generator is a pure function of its parameters and seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import InstanceSpec

KINDS = ("planted", "uniform", "full", "starved")


@dataclass(frozen=True)
class GeneratorSpec:
    kind: str
    n: int
    m: int = 0
    edge_size: int = 0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"unknown generator kind {self.kind!r}; expected one of {KINDS}")
        if self.n < 1 or self.m < 0:
            raise ValueError("generator needs n >= 1 and a non-negative count")
        if self.kind == "planted" and self.m < 1:
            raise ValueError("planted instances need at least one cover")
        if self.kind == "uniform" and not 1 <= self.edge_size <= self.n:
            raise ValueError(f"edge size must lie in 1..{self.n}")
        if self.kind == "starved" and self.n < 2:
            raise ValueError("starved instances need n >= 2")

    def build(self) -> InstanceSpec:
        if self.kind == "planted":
            return gen_planted(self.n, self.m, self.seed)
        if self.kind == "uniform":
            return gen_uniform(self.n, self.m, self.edge_size, self.seed)
        if self.kind == "full":
            return gen_full(self.n, self.m)
        return gen_starved(self.n, self.m, self.seed)


_ALIASES = {"covers": "m", "size": "edge_size", "edgesize": "edge_size", "k": "edge_size"}


def parse_gen_spec(text: str, default_seed: int = 0) -> GeneratorSpec:
    """Parse ``kind:key=value,...``, e.g. ``planted:n=8,covers=32``."""
    kind, _, rest = text.partition(":")
    fields: dict[str, int] = {"seed": default_seed}
    for item in filter(None, rest.split(",")):
        key, eq, value = item.partition("=")
        if not eq:
            raise ValueError(f"malformed generator parameter {item!r}")
        key = _ALIASES.get(key.strip().lower(), key.strip().lower())
        if key not in ("n", "m", "edge_size", "seed"):
            raise ValueError(f"unknown generator parameter {key!r}")
        fields[key] = int(value)
    if "n" not in fields:
        raise ValueError("generator spec needs n=")
    return GeneratorSpec(kind.strip().lower(), **fields)


def gen_planted(n: int, cover_count: int, seed: int) -> InstanceSpec:
    """``cover_count`` random partitions of the nodes, shuffled together.

    Each partition is a set cover, so the optimum is at least ``cover_count``.
    """
    rng = np.random.default_rng(seed)
    edges: list[frozenset[int]] = []
    for _ in range(cover_count):
        blocks = int(rng.integers(1, n + 1))
        nodes = rng.permutation(n) + 1
        label = np.empty(n, dtype=np.int64)
        label[:blocks] = np.arange(blocks)  # one node per block keeps every block non-empty
        label[blocks:] = rng.integers(0, blocks, size=n - blocks)
        for b in range(blocks):
            edges.append(frozenset(int(v) for v in nodes[label == b]))
    order = rng.permutation(len(edges))
    return InstanceSpec(n, tuple(edges[i] for i in order))


def gen_uniform(n: int, m: int, edge_size: int, seed: int) -> InstanceSpec:
    if not 1 <= edge_size <= n:
        raise ValueError(f"edge size must lie in 1..{n}")
    rng = np.random.default_rng(seed)
    edges = tuple(
        frozenset(int(v) + 1 for v in rng.choice(n, size=edge_size, replace=False))
        for _ in range(m)
    )
    return InstanceSpec(n, edges)


def gen_full(n: int, m: int) -> InstanceSpec:
    everything = frozenset(range(1, n + 1))
    return InstanceSpec(n, (everything,) * m)


def gen_starved(n: int, m: int, seed: int = 0) -> InstanceSpec:
    """Node ``n`` only joins every ``ceil(sqrt(m))``-th edge after the first.

    Those edges are the whole node set; every other edge is ``{1..n-1}``. The
    construction is deterministic, so ``seed`` is accepted for a uniform
    generator signature and otherwise ignored.
    """
    if n < 2:
        raise ValueError("starved instances need n >= 2")
    stride = max(1, math.isqrt(m - 1) + 1) if m > 0 else 1
    rest = frozenset(range(1, n))
    everything = rest | {n}
    edges = tuple(everything if t > 0 and t % stride == 0 else rest for t in range(m))
    return InstanceSpec(n, edges)
