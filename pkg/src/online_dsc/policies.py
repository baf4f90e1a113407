"""Color-selection strategies: randomized, potential-guided, greedy, replay."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator

import numpy as np

from .engine import EngineState, min_phase
from .model import palette_range
from .potential import ENUMERATION_LIMIT, CapacityError, EdgeTerms, PotentialView

RNG_NAME = "PCG64"

# Relative gap under which two candidate potentials count as a near tie.
TIE_TOLERANCE = 1e-9


@dataclass(frozen=True)
class Decision:
    kstar: int
    color: int
    candidate_count: int = 1
    margin: float = 0.0
    near_tie: bool = False


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def rand_policy(state: EngineState, edge: Iterable[int], rng: np.random.Generator) -> Decision:
    """Uniform palette from the ``h``-window above the edge's min phase, then a uniform color."""
    ps = min_phase(state, edge)
    kstar = ps + int(rng.integers(state.h))
    lo, _ = palette_range(kstar)
    color = lo + int(rng.integers(1 << kstar))
    return Decision(kstar, color)


def det_policy(
    state: EngineState,
    view: PotentialView,
    edge: Iterable[int],
    exhaustive: bool = False,
) -> Decision:
    """Candidate color minimizing the next potential.

    Ties go to the smaller palette, then to fewer edge nodes already holding
    the color, then to the smaller color. Holding a color only raises the
    price, so a palette with a color no edge node holds needs just that color
    priced; fully held palettes are priced per class of equally held colors.
    ``exhaustive`` prices every color one by one instead.
    """
    terms = EdgeTerms(state, view, edge)
    # (pattern, k, color) for every priced candidate
    cands: list[tuple[tuple[bool, ...], int, int]] = []
    for k in terms.window():
        if exhaustive:
            if (1 << k) > ENUMERATION_LIMIT:
                raise CapacityError(f"palette {k} too large for an exhaustive scan")
            lo, hi = palette_range(k)
            cands.extend((terms.holders(k, color), k, color) for color in range(lo, hi + 1))
            continue
        color = terms.first_fresh(k)
        if color is not None:
            cands.append(((False,) * len(terms.nodes), k, color))
            continue
        cands.extend((pattern, k, color) for pattern, color in terms.color_classes(k))
    # Screen with plain sums, then price survivors exactly. The window is far
    # wider than the rounding error of either sum and covers the tie band.
    approx = [terms.approx_delta(k, pattern) for pattern, k, _ in cands]
    cutoff = min(approx) + 4 * TIE_TOLERANCE * max(1.0, view.phi)
    keys = sorted(
        (terms.phi_for_pattern(k, pattern), k, sum(pattern), color)
        for (pattern, k, color), a in zip(cands, approx)
        if a <= cutoff
    )
    best = keys[0]
    near_tie = len(keys) > 1 and keys[1][0] - best[0] <= TIE_TOLERANCE * max(1.0, best[0])
    return Decision(best[1], best[3], len(cands), view.phi - best[0], near_tie)


class GreedyAux:
    """Active color plus the nodes it has not covered yet."""

    def __init__(self, n: int) -> None:
        self.n = n
        self.active = 1
        self.uncovered = set(range(1, n + 1))


def greedy_policy(aux: GreedyAux, edge: Iterable[int]) -> int:
    """Give the edge the active color; move to a new color once it covers every node."""
    color = aux.active
    aux.uncovered.difference_update(edge)
    if not aux.uncovered:
        aux.active += 1
        aux.uncovered = set(range(1, aux.n + 1))
    return color


def replay_policy(trace: Iterable[dict]) -> Iterator[Decision]:
    """Recorded decisions, in order."""
    for entry in trace:
        if entry.get("kstar") is None:
            raise ValueError(f"trace entry {entry.get('step')} has no palette; cannot replay")
        yield Decision(int(entry["kstar"]), int(entry["color"]))
