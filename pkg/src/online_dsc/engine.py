"""Online state machine shared by every phase-based policy.

The engine owns everything the algorithm does on edge arrival except the
choice of ``(kstar, color)``: node phases, gathered color sets, the ``w``/``s``
degree counters and the color -> gatherers index used to count fully used
colors.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from typing import Iterable

from .model import MAX_PHASE, PaletteParams, palette_of, palette_range, quota


class EngineError(ValueError):
    """A precondition of an engine operation was violated."""


@dataclass
class NodeState:
    phase: int = 0
    gathered: dict[int, set[int]] = field(default_factory=dict)
    w: dict[int, int] = field(default_factory=dict)
    s: dict[int, int] = field(default_factory=dict)
    degree: int = 0
    # gathered[k] as a bitmask, bit j standing for color 2**k + j
    bits: dict[int, int] = field(default_factory=dict)

    def count(self, k: int) -> int:
        got = self.gathered.get(k)
        return len(got) if got else 0

    def holds(self, k: int, color: int) -> bool:
        got = self.gathered.get(k)
        return got is not None and color in got

    def mask(self, k: int) -> int:
        return self.bits.get(k, 0)

    def to_json(self) -> dict:
        return {
            "phase": self.phase,
            "degree": self.degree,
            "gathered": {str(k): sorted(v) for k, v in sorted(self.gathered.items())},
            "w": {str(k): v for k, v in sorted(self.w.items())},
            "s": {str(k): v for k, v in sorted(self.s.items())},
        }

    @classmethod
    def from_json(cls, obj: dict) -> "NodeState":
        node = cls(phase=obj["phase"], degree=obj["degree"])
        node.w = {int(k): v for k, v in obj["w"].items()}
        node.s = {int(k): v for k, v in obj["s"].items()}
        for k, colors in obj["gathered"].items():
            k = int(k)
            node.gathered[k] = set(colors)
            node.bits[k] = sum(1 << (c - (1 << k)) for c in colors)
        return node


@dataclass
class EngineState:
    params: PaletteParams
    nodes: list[NodeState]
    step: int = 0
    gatherers: dict[int, set[int]] = field(default_factory=dict)
    fully_used: int = 0

    @property
    def n(self) -> int:
        return self.params.n

    @property
    def h(self) -> int:
        return self.params.h

    def node(self, v: int) -> NodeState:
        return self.nodes[v - 1]

    def phases(self) -> list[int]:
        return [nd.phase for nd in self.nodes]

    def snapshot(self) -> "EngineState":
        return copy.deepcopy(self)

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "step": self.step,
            "nodes": [nd.to_json() for nd in self.nodes],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "EngineState":
        state = init_state(obj["n"])
        state.step = obj["step"]
        state.nodes = [NodeState.from_json(o) for o in obj["nodes"]]
        for v, nd in enumerate(state.nodes, start=1):
            for colors in nd.gathered.values():
                for c in colors:
                    state.gatherers.setdefault(c, set()).add(v)
        state.fully_used = sum(1 for g in state.gatherers.values() if len(g) == state.n)
        return state


def init_state(n: int) -> EngineState:
    if not isinstance(n, int) or n < 1:
        raise EngineError(f"node count must be a positive integer, got {n!r}")
    return EngineState(PaletteParams.for_nodes(n), [NodeState() for _ in range(n)])


def _check_edge(state: EngineState, edge: Iterable[int]) -> frozenset[int]:
    edge = frozenset(edge)
    if not edge:
        raise EngineError("empty hyperedge")
    for v in edge:
        if not 1 <= v <= state.n:
            raise EngineError(f"node id {v} out of range 1..{state.n}")
    return edge


def min_phase(state: EngineState, edge: Iterable[int]) -> int:
    """Smallest current phase among the nodes of ``edge``."""
    edge = _check_edge(state, edge)
    return min(state.nodes[v - 1].phase for v in edge)


def check_decision(state: EngineState, edge: Iterable[int], kstar: int, color: int) -> int:
    """Validate a ``(kstar, color)`` choice for ``edge``; returns the edge's min phase."""
    ps = min_phase(state, edge)
    if not ps <= kstar <= ps + state.h - 1:
        raise EngineError(
            f"kstar={kstar} outside the window [{ps}, {ps + state.h - 1}]"
        )
    if kstar >= MAX_PHASE:
        raise OverflowError(f"palette {kstar} exceeds the 64-bit color range")
    if color < 1 or palette_of(color) != kstar:
        lo, hi = palette_range(kstar)
        raise EngineError(f"color {color} not in palette {kstar} = [{lo}, {hi}]")
    return ps


def apply_color(state: EngineState, edge: Iterable[int], kstar: int, color: int) -> EngineState:
    """Color ``edge`` with ``color`` from palette ``kstar``, mutating ``state``.

    Counters are charged against the phase each node had when the edge
    arrived; phase completion then cascades, so a node that already holds
    enough colors of its next palette advances again in the same step.
    """
    edge = _check_edge(state, edge)
    ps = check_decision(state, edge, kstar, color)
    n = state.n
    last_w = ps + state.h - 1
    holders = state.gatherers.setdefault(color, set())
    bit = 1 << (color - (1 << kstar))
    for v in edge:
        nd = state.nodes[v - 1]
        nd.degree += 1
        p = nd.phase
        if p <= last_w:
            nd.w[p] = nd.w.get(p, 0) + 1
        else:
            nd.s[p] = nd.s.get(p, 0) + 1
        got = nd.gathered.get(kstar)
        if got is None:
            got = nd.gathered[kstar] = set()
        if color not in got:
            got.add(color)
            nd.bits[kstar] = nd.bits.get(kstar, 0) | bit
            holders.add(v)
            if len(holders) == n:
                state.fully_used += 1
        while nd.count(nd.phase) >= quota(nd.phase, n):
            nd.phase += 1
    state.step += 1
    return state


def fully_used_count(state: EngineState) -> int:
    """Number of colors gathered by every node."""
    return state.fully_used


def min_completed_phase(state: EngineState) -> int:
    """Largest phase every node has completed, or -1."""
    return min(nd.phase for nd in state.nodes) - 1


def min_degree(state: EngineState) -> int:
    return min(nd.degree for nd in state.nodes)
