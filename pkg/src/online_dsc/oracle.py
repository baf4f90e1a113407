"""Offline ground truth for small instances."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Iterator

from .model import InstanceSpec, window_size

DEFAULT_BUDGET = 14


@dataclass
class OfflineResult:
    opt: int
    witness: list[list[int]] | None
    min_degree: int
    exact: bool

    def to_json(self) -> dict:
        return {
            "opt": self.opt,
            "exact": self.exact,
            "minDegree": self.min_degree,
            "witness": self.witness,
        }


def is_set_cover(instance: InstanceSpec, indices: Iterable[int]) -> bool:
    covered: set[int] = set()
    for t in indices:
        covered |= instance.edges[t]
    return len(covered) == instance.n


def exact_opt(instance: InstanceSpec, budget: int = DEFAULT_BUDGET) -> OfflineResult:
    """Maximum number of disjoint set covers by branch and bound.

    Edges are placed largest first into an open (not yet covering) class, a
    new class, or nowhere. A branch is cut when, for some node, the open
    classes containing it plus the remaining edges containing it cannot beat
    the best count found so far. Over budget, only the min-degree bound is
    returned.
    """
    delta = instance.min_degree()
    m = instance.m
    if m > budget:
        return OfflineResult(delta, None, delta, exact=False)
    n = instance.n
    full = (1 << n) - 1
    order = sorted(range(m), key=lambda t: -len(instance.edges[t]))
    masks = [sum(1 << (v - 1) for v in instance.edges[t]) for t in order]
    # remaining[t][i]: edges at positions >= t containing node i
    remaining = [[0] * n for _ in range(m + 1)]
    reach = [0] * (m + 1)
    for t in range(m - 1, -1, -1):
        row = remaining[t]
        row[:] = remaining[t + 1]
        for i in range(n):
            if masks[t] >> i & 1:
                row[i] += 1
        reach[t] = reach[t + 1] | masks[t]

    best_count = 0
    best_witness: list[list[int]] = []

    def bound(t: int, open_masks: list[int], done: int) -> int:
        rem = remaining[t]
        extra = min(rem[i] + sum(c >> i & 1 for c in open_masks) for i in range(n))
        return done + extra

    def dfs(t: int, open_cls: list[tuple[int, list[int]]], done: list[list[int]]) -> None:
        nonlocal best_count, best_witness
        if len(done) > best_count:
            best_count = len(done)
            best_witness = [list(c) for c in done]
        if t == m or best_count >= delta:
            return
        # classes the remaining edges can no longer complete are dead weight
        open_cls = [(c, ids) for c, ids in open_cls if (full & ~c) & ~reach[t] == 0]
        if bound(t, [c for c, _ in open_cls], len(done)) <= best_count:
            return
        e, idx = masks[t], order[t]
        tried = set()
        for j, (c, ids) in enumerate(open_cls):
            merged = c | e
            if merged == c or c in tried:
                continue
            tried.add(c)
            if merged == full:
                dfs(t + 1, open_cls[:j] + open_cls[j + 1 :], done + [ids + [idx]])
            else:
                dfs(t + 1, open_cls[:j] + [(merged, ids + [idx])] + open_cls[j + 1 :], done)
        if e == full:
            dfs(t + 1, open_cls, done + [[idx]])
        else:
            dfs(t + 1, open_cls + [(e, [idx])], done)
        dfs(t + 1, open_cls, done)

    dfs(0, [], [])
    witness = [sorted(c) for c in best_witness]
    if witness:
        # leftover edges ride along in the first cover so the witness partitions E
        used = {t for c in witness for t in c}
        witness[0] = sorted(witness[0] + [t for t in range(m) if t not in used])
    return OfflineResult(best_count, witness, delta, exact=True)


def _set_partitions(m: int) -> Iterator[list[int]]:
    """Restricted growth strings: block label of each of ``m`` items."""
    labels = [0] * m
    if m == 0:
        yield []
        return

    def rec(i: int, top: int) -> Iterator[list[int]]:
        if i == m:
            yield labels
            return
        for b in range(top + 2):
            labels[i] = b
            yield from rec(i + 1, max(top, b))

    labels[0] = 0
    yield from rec(1, 0)


def naive_opt(instance: InstanceSpec) -> int:
    """Maximum number of covering blocks over every set partition of the edges."""
    best = 0
    m = instance.m
    for labels in _set_partitions(m):
        blocks: dict[int, set[int]] = {}
        for t, b in enumerate(labels):
            blocks.setdefault(b, set()).update(instance.edges[t])
        best = max(best, sum(1 for blk in blocks.values() if len(blk) == instance.n))
    return best


def bound_radius(n: int) -> float:
    """``24 h ln(4 e n)``: min degree needed per doubling of the gain."""
    return 24 * window_size(n) * math.log(4 * math.e * n)


@dataclass
class Verdict:
    holds: bool
    r: float
    delta_bound: float
    delta_ratio: float | None
    opt_bound: float | None
    opt_holds: bool | None
    opt_ratio: float | None

    def to_json(self) -> dict:
        return {
            "holds": self.holds,
            "r": self.r,
            "deltaBound": self.delta_bound,
            "deltaRatio": self.delta_ratio,
            "optBound": self.opt_bound,
            "optHolds": self.opt_holds,
            "optRatio": self.opt_ratio,
        }


def competitive_check(gain: int, offline: OfflineResult, n: int) -> Verdict:
    """Does ``gain >= (delta - r) / (4r)`` hold, plus the OPT form when OPT is exact."""
    r = bound_radius(n)
    delta = offline.min_degree
    delta_bound = (delta - r) / (4 * r)
    holds = gain >= delta_bound
    opt_bound = opt_holds = opt_ratio = None
    if offline.exact:
        opt_bound = offline.opt / (96 * window_size(n) * math.log(4 * math.e * n)) - 0.25
        opt_holds = gain >= opt_bound
        opt_ratio = offline.opt / gain if gain else None
    return Verdict(
        holds=holds,
        r=r,
        delta_bound=delta_bound,
        delta_ratio=delta / gain if gain else None,
        opt_bound=opt_bound,
        opt_holds=opt_holds,
        opt_ratio=opt_ratio,
    )
