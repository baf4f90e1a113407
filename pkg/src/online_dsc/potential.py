"""Potential function bookkeeping.

Each node carries a score

    Z_i = sum_k (w_ik - 2 * d_k(c_ik)) / (4 h 2^k)

where ``c_ik`` is the number of palette-``k`` colors it holds and ``d_k`` is
``h`` times the expected coupon-collector time on a ``2^k``-color palette.
The potential is ``Phi = sum_i exp(Z_i)``; it starts at ``n``.

One step changes ``Z_i`` only for nodes of the arriving edge, by
``+1/(4h 2^p(i))`` when the node's ``w`` counter is charged and by
``-1/(2 (2^k - c_ik))`` when it gathers a new color of palette ``k``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable

import numpy as np

from .engine import EngineState, apply_color, check_decision, min_phase
from .model import palette_range, quota

# Palettes larger than this are never enumerated color by color.
ENUMERATION_LIMIT = 1 << 20


class CapacityError(RuntimeError):
    """An exact enumeration would exceed ``ENUMERATION_LIMIT`` candidates."""


# -- d_k and harmonic numbers ----------------------------------------------


class _Prefix:
    """Neumaier-compensated prefix sums of ``2^k / (2^k - j + 1)``."""

    __slots__ = ("size", "values", "total", "comp")

    def __init__(self, size: int) -> None:
        self.size = size
        self.values = [0.0]
        self.total = 0.0
        self.comp = 0.0

    def extend_to(self, m: int) -> None:
        size = float(self.size)
        total, comp = self.total, self.comp
        for j in range(len(self.values), m + 1):
            x = size / (self.size - j + 1)
            t = total + x
            if abs(total) >= abs(x):
                comp += (total - t) + x
            else:
                comp += (x - t) + total
            total = t
            self.values.append(total + comp)
        self.total, self.comp = total, comp


_PREFIX: dict[int, _Prefix] = {}


def d_k(k: int, m: int, h: int) -> float:
    """``h * sum_{j=1..m} 2^k / (2^k - j + 1)``; defined for ``0 <= m <= 2^k``."""
    size = 1 << k
    if m < 0 or m > size:
        raise ValueError(f"d_k undefined for m={m} on a palette of {size} colors")
    table = _PREFIX.get(k)
    if table is None:
        table = _PREFIX[k] = _Prefix(size)
    if m >= len(table.values):
        table.extend_to(m)
    return h * table.values[m]


_HARMONIC_DIRECT = 1 << 20
_harmonic_table: np.ndarray | None = None


def _table() -> np.ndarray:
    global _harmonic_table
    if _harmonic_table is None:
        terms = 1.0 / np.arange(1, _HARMONIC_DIRECT + 1, dtype=np.longdouble)
        table = np.zeros(_HARMONIC_DIRECT + 1, dtype=np.longdouble)
        np.cumsum(terms, out=table[1:])
        _harmonic_table = table
    return _harmonic_table


def harmonic(m: int) -> float:
    """The ``m``-th harmonic number (``H(0) = 0``)."""
    if m < 0:
        raise ValueError("harmonic number of a negative index")
    if m <= _HARMONIC_DIRECT:
        return float(_table()[m])
    # Euler-Maclaurin tail; truncation error is far below double precision here
    x = float(m)
    return math.log(x) + np.euler_gamma + 1 / (2 * x) - 1 / (12 * x * x) + 1 / (120 * x**4)


def harmonic_gap(k: int, n: int) -> float:
    """``H(2^k) - H(2^k - q_k)``, the scaled cost of finishing phase ``k``."""
    size = 1 << k
    rest = size - quota(k, n)
    if size <= _HARMONIC_DIRECT:
        table = _table()
        return float(table[size] - table[rest])
    return harmonic(size) - harmonic(rest)


def log_bound(n: int) -> float:
    """``ln(4 e n)``, the per-phase harmonic budget."""
    return math.log(4 * math.e * n)


# -- per-node scores --------------------------------------------------------


def node_score(state: EngineState, v: int) -> float:
    """``Z_v`` recomputed from the node's counters and color sets."""
    nd = state.nodes[v - 1]
    h = state.h
    w, got = nd.w, nd.gathered
    terms = [
        (w.get(k, 0) - 2.0 * d_k(k, len(got[k]) if k in got else 0, h)) / (4 * h * (1 << k))
        for k in sorted(w.keys() | got.keys())
    ]
    return math.fsum(terms)


def _exp(x: float) -> float:
    try:
        return math.exp(x)
    except OverflowError:
        return math.inf


@dataclass
class PotentialView:
    z: list[float]
    ez: list[float]
    phi: float
    steps_since_sync: int = 0

    def copy(self) -> "PotentialView":
        return PotentialView(list(self.z), list(self.ez), self.phi, self.steps_since_sync)


def recompute_phi(state: EngineState) -> PotentialView:
    """Scores and potential computed from scratch."""
    z = [node_score(state, v) for v in range(1, state.n + 1)]
    ez = [_exp(x) for x in z]
    return PotentialView(z, ez, math.fsum(ez))


class EdgeTerms:
    """Everything needed to price every candidate color for one arriving edge."""

    def __init__(self, state: EngineState, view: PotentialView, edge: Iterable[int]) -> None:
        self.state = state
        self.view = view
        self.nodes = tuple(sorted(edge))
        self.ps = min_phase(state, self.nodes)
        h = state.h
        last_w = self.ps + h - 1
        self.old = [view.ez[v - 1] for v in self.nodes]
        shifted = []
        for v in self.nodes:
            p = state.nodes[v - 1].phase
            bump = 1.0 / (4 * h * (1 << p)) if p <= last_w else 0.0
            shifted.append(view.z[v - 1] + bump)
        self.shifted = shifted
        self.held = [_exp(x) for x in shifted]
        self._fresh: dict[int, list[float]] = {}
        self._counts: dict[int, list[int]] = {}

    def window(self) -> range:
        return range(self.ps, self.ps + self.state.h)

    def fresh_values(self, k: int) -> list[float]:
        """Per-node ``exp(Z)`` after gathering a new palette-``k`` color (``inf`` marks impossible)."""
        vals = self._fresh.get(k)
        if vals is None:
            size = 1 << k
            vals = [
                _exp(zs - 1.0 / (2 * (size - c))) if c < size else math.inf
                for zs, c in zip(self.shifted, self.counts(k))
            ]
            self._fresh[k] = vals
        return vals

    def counts(self, k: int) -> list[int]:
        """``c_ik`` for each edge node."""
        got = self._counts.get(k)
        if got is None:
            got = self._counts[k] = [self.state.nodes[v - 1].count(k) for v in self.nodes]
        return got

    def holders(self, k: int, color: int) -> tuple[bool, ...]:
        return tuple(self.state.nodes[v - 1].holds(k, color) for v in self.nodes)

    def approx_delta(self, k: int, pattern: tuple[bool, ...]) -> float:
        """Plain-float change of the potential; only good for screening."""
        fresh = self.fresh_values(k)
        return sum(
            (hv if has else fv) - old
            for has, hv, fv, old in zip(pattern, self.held, fresh, self.old)
        )

    def phi_for_pattern(self, k: int, pattern: tuple[bool, ...]) -> float:
        fresh = self.fresh_values(k)
        new = [hv if has else fv for has, hv, fv in zip(pattern, self.held, fresh)]
        return math.fsum([self.view.phi, *(-x for x in self.old), *new])

    def phi_after(self, k: int, color: int) -> float:
        return self.phi_for_pattern(k, self.holders(k, color))

    def expected_phi(self) -> float:
        """Mean of ``phi_after`` over the two-stage uniform draw.

        Node ``i`` gathers a new color with probability ``(2^k - c_ik) / 2^k``
        given ``kstar = k``, so the expectation splits per node.
        """
        h = self.state.h
        terms = [self.view.phi, *(-x for x in self.old)]
        for k in self.window():
            size = 1 << k
            fresh = self.fresh_values(k)
            for c, hv, fv in zip(self.counts(k), self.held, fresh):
                terms.append(hv * c / (size * h))
                if c < size:
                    terms.append(fv * (size - c) / (size * h))
        return math.fsum(terms)

    def first_fresh(self, k: int) -> int | None:
        """Smallest palette-``k`` color no node of the edge holds."""
        held = 0
        for v in self.nodes:
            held |= self.state.nodes[v - 1].mask(k)
        free = ~held & ((1 << (1 << k)) - 1)
        if not free:
            return None
        return (1 << k) + (free & -free).bit_length() - 1

    def color_classes(self, k: int) -> list[tuple[tuple[bool, ...], int]]:
        """Split palette ``k`` by which edge nodes hold each color.

        Returns ``(pattern, smallest color)`` for every non-empty class, where
        ``pattern[j]`` tells whether ``self.nodes[j]`` holds the class's colors.
        """
        parts: list[tuple[int, tuple[bool, ...]]] = [((1 << (1 << k)) - 1, ())]
        for v in self.nodes:
            mask = self.state.nodes[v - 1].mask(k)
            split = []
            for part, pattern in parts:
                inside = part & mask
                if inside:
                    split.append((inside, pattern + (True,)))
                outside = part & ~mask
                if outside:
                    split.append((outside, pattern + (False,)))
            parts = split
        return [(pattern, (1 << k) + (part & -part).bit_length() - 1) for part, pattern in parts]


def phi_after_candidate(
    state: EngineState, view: PotentialView, edge: Iterable[int], kstar: int, color: int
) -> float:
    """Potential after coloring ``edge`` with ``color``, touching only edge nodes."""
    check_decision(state, edge, kstar, color)
    return EdgeTerms(state, view, edge).phi_after(kstar, color)


def exact_expected_phi(state: EngineState, view: PotentialView, edge: Iterable[int]) -> float:
    """Expected next potential under the randomized two-stage color draw."""
    return EdgeTerms(state, view, edge).expected_phi()


def naive_expected_phi(state: EngineState, edge: Iterable[int]) -> float:
    """Brute-force expectation: apply every candidate to a copy and recompute."""
    edge = frozenset(edge)
    ps = min_phase(state, edge)
    h = state.h
    total = sum(1 << k for k in range(ps, ps + h))
    if total > ENUMERATION_LIMIT:
        raise CapacityError(f"{total} candidates")
    acc = []
    for k in range(ps, ps + h):
        lo, hi = palette_range(k)
        for color in range(lo, hi + 1):
            nxt = apply_color(state.snapshot(), edge, k, color)
            acc.append(recompute_phi(nxt).phi / (h * (1 << k)))
    return math.fsum(acc)


def advance_view(
    view: PotentialView, state: EngineState, edge: Iterable[int], kstar: int, color: int
) -> float:
    """Update ``view`` for a decision that is about to be applied to ``state``.

    Must be called before :func:`apply_color`. Returns the new potential.
    """
    terms = EdgeTerms(state, view, edge)
    pattern = terms.holders(kstar, color)
    fresh = terms.fresh_values(kstar)
    size = 1 << kstar
    for j, v in enumerate(terms.nodes):
        z = terms.shifted[j]
        if not pattern[j]:
            c = state.nodes[v - 1].count(kstar)
            z -= 1.0 / (2 * (size - c))
            ez = fresh[j]
        else:
            ez = terms.held[j]
        view.z[v - 1] = z
        view.ez[v - 1] = ez
    view.phi = terms.phi_for_pattern(kstar, pattern)
    view.steps_since_sync += 1
    return view.phi


def sync_view(view: PotentialView, state: EngineState) -> None:
    fresh = recompute_phi(state)
    view.z, view.ez, view.phi = fresh.z, fresh.ez, fresh.phi
    view.steps_since_sync = 0


def check_growth_probability(state: EngineState, edge: Iterable[int], node: int) -> Fraction:
    """Probability that ``node`` gathers a new color of its current palette.

    Exact enumeration over every ``(kstar, color)`` pair of the step.
    """
    edge = frozenset(edge)
    if node not in edge:
        raise ValueError(f"node {node} is not in the edge")
    ps = min_phase(state, edge)
    h = state.h
    nd = state.nodes[node - 1]
    p = nd.phase
    prob = Fraction(0)
    for k in range(ps, ps + h):
        size = 1 << k
        if size > ENUMERATION_LIMIT:
            raise CapacityError(f"palette {k} has {size} colors")
        lo, hi = palette_range(k)
        weight = Fraction(1, h * size)
        for color in range(lo, hi + 1):
            if k == p and not nd.holds(k, color):
                prob += weight
    return prob
