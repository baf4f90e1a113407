"""Core data model: instances, palettes and quotas.

Nodes are numbered ``1..n``. Colors are positive integers; color ``c``
belongs to palette ``k = floor(log2 c)``, i.e. palette ``k`` holds the
``2**k`` colors ``2**k .. 2**(k+1) - 1``.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from typing import Iterable

# Colors are treated as signed 64-bit values; palettes at or beyond this index
# would not fit.
MAX_PHASE = 62


class InstanceError(ValueError):
    """Raised for malformed instance input."""


@dataclass(frozen=True)
class InstanceSpec:
    """Node count plus the hyperedges in online arrival order.

    Edges form a multiset: the same node set may arrive many times.
    """

    n: int
    edges: tuple[frozenset[int], ...]

    def __post_init__(self) -> None:
        if not isinstance(self.n, int) or self.n < 1:
            raise InstanceError(f"node count must be a positive integer, got {self.n!r}")
        for t, edge in enumerate(self.edges):
            if not edge:
                raise InstanceError(f"empty hyperedge at index {t}")
            for v in edge:
                if not 1 <= v <= self.n:
                    raise InstanceError(
                        f"node id out of range at index {t}: {v} not in 1..{self.n}"
                    )

    @classmethod
    def build(cls, n: int, edges: Iterable[Iterable[int]]) -> "InstanceSpec":
        return cls(n, tuple(frozenset(e) for e in edges))

    @property
    def m(self) -> int:
        return len(self.edges)

    def degrees(self) -> list[int]:
        """Final degree of every node, indexed ``0..n-1``."""
        deg = [0] * self.n
        for edge in self.edges:
            for v in edge:
                deg[v - 1] += 1
        return deg

    def min_degree(self) -> int:
        return min(self.degrees())

    def to_json(self) -> dict:
        return {"n": self.n, "edges": [sorted(e) for e in self.edges]}

    def digest(self) -> str:
        return hashlib.sha256(serialize_instance(self).encode()).hexdigest()


def parse_instance(text: str | bytes | dict) -> InstanceSpec:
    """Parse the JSON instance format ``{"n": int, "edges": [[int, ...], ...]}``.

    Duplicate node ids inside an edge are collapsed.
    """
    if isinstance(text, dict):
        obj = text
    else:
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InstanceError(f"invalid JSON: {exc}") from exc
    if not isinstance(obj, dict) or "n" not in obj or "edges" not in obj:
        raise InstanceError('instance must be an object with keys "n" and "edges"')
    n = obj["n"]
    if isinstance(n, bool) or not isinstance(n, int) or n < 1:
        raise InstanceError(f"node count must be a positive integer, got {n!r}")
    raw = obj["edges"]
    if not isinstance(raw, list):
        raise InstanceError('"edges" must be a list')
    edges = []
    for t, e in enumerate(raw):
        if not isinstance(e, list) or not all(
            isinstance(v, int) and not isinstance(v, bool) for v in e
        ):
            raise InstanceError(f"hyperedge at index {t} must be a list of integers")
        edges.append(frozenset(e))
    return InstanceSpec(n, tuple(edges))


def serialize_instance(instance: InstanceSpec) -> str:
    return json.dumps(instance.to_json(), separators=(",", ":"))


def load_instance(path: str) -> InstanceSpec:
    with open(path) as fh:
        return parse_instance(fh.read())


# -- palettes ---------------------------------------------------------------


def window_size(n: int) -> int:
    """Number of candidate palettes per step: ``max(1, ceil(log2 n))``."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    return max(1, (n - 1).bit_length())


@dataclass(frozen=True)
class PaletteParams:
    n: int
    h: int

    @classmethod
    def for_nodes(cls, n: int) -> "PaletteParams":
        return cls(n, window_size(n))


def _check_phase(k: int) -> None:
    if k < 0:
        raise ValueError(f"phase index must be >= 0, got {k}")
    if k >= MAX_PHASE:
        raise OverflowError(f"palette {k} exceeds the 64-bit color range")


def palette_range(k: int) -> tuple[int, int]:
    """Inclusive color bounds ``(2**k, 2**(k+1) - 1)`` of palette ``k``."""
    _check_phase(k)
    return 1 << k, (1 << (k + 1)) - 1


def palette_of(color: int) -> int:
    if color < 1:
        raise ValueError(f"colors are positive integers, got {color}")
    return color.bit_length() - 1


def quota(k: int, n: int) -> int:
    """Colors a node must gather from palette ``k`` to finish phase ``k``.

    Exact integer form of ``ceil((1 - 1/(2n)) * 2**k)``.
    """
    _check_phase(k)
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    return -(-((2 * n - 1) << k) // (2 * n))
