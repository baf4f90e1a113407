"""Runtime property checks for the analysis of the phase-based algorithm.

Inequalities are compared with additive slack ``1e-9 * max(1, |rhs|)``
unless a caller asks for something tighter.
"""

from __future__ import annotations

import bisect
import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable

import mpmath
import numpy as np

from .engine import EngineState, fully_used_count, min_completed_phase
from .model import quota
from .potential import (
    PotentialView,
    d_k,
    exact_expected_phi,
    harmonic_gap,
    log_bound,
    node_score,
)

SLACK = 1e-9


def leq(lhs: float, rhs: float, slack: float = SLACK) -> bool:
    return lhs <= rhs + slack * max(1.0, abs(rhs))


class InvariantViolation(RuntimeError):
    def __init__(self, step: int, check: str, detail: str) -> None:
        super().__init__(f"step {step}: {check} violated: {detail}")
        self.step = step
        self.check = check
        self.detail = detail


# -- state-level properties -------------------------------------------------


def gain_bound_holds(state: EngineState) -> bool:
    """Once every node finished phase ``l >= 1``, at least ``2^(l-1)`` colors are fully used."""
    done = min_completed_phase(state)
    return done < 1 or fully_used_count(state) >= 1 << (done - 1)


def counter_identity_violations(state: EngineState, nodes: Iterable[int] | None = None) -> list[int]:
    """Nodes whose ``w`` plus ``s`` counters do not add up to their degree."""
    nodes = range(1, state.n + 1) if nodes is None else nodes
    bad = []
    for v in nodes:
        nd = state.nodes[v - 1]
        if sum(nd.w.values()) + sum(nd.s.values()) != nd.degree:
            bad.append(v)
    return bad


def cascade_violations(state: EngineState, nodes: Iterable[int] | None = None) -> list[int]:
    """Nodes holding a full quota of their current palette."""
    nodes = range(1, state.n + 1) if nodes is None else nodes
    return [
        v
        for v in nodes
        if state.nodes[v - 1].count(state.nodes[v - 1].phase)
        >= quota(state.nodes[v - 1].phase, state.n)
    ]


def gatherers_consistent(state: EngineState) -> bool:
    index: dict[int, set[int]] = {}
    for v, nd in enumerate(state.nodes, start=1):
        for colors in nd.gathered.values():
            for c in colors:
                index.setdefault(c, set()).add(v)
    if {c: g for c, g in state.gatherers.items() if g} != index:
        return False
    return state.fully_used == sum(1 for g in index.values() if len(g) == state.n)


def overfull_palettes(state: EngineState) -> list[tuple[int, int, int, int]]:
    """``(node, k, c_ik, q_k)`` for every palette where a node holds more than the quota.

    A node keeps gathering colors of palettes it already finished (and of
    palettes above its phase), so this list is usually non-empty.
    """
    out = []
    for v, nd in enumerate(state.nodes, start=1):
        for k, colors in nd.gathered.items():
            q = quota(k, state.n)
            if len(colors) > q:
                out.append((v, k, len(colors), q))
    return out


def phase_cost_violations(state: EngineState) -> list[tuple[int, int, float, float]]:
    """``d_k(c_ik) <= h ln(4en) 2^k`` over every palette with ``c_ik <= q_k``.

    Palettes holding more than the quota are outside the bound's premise; see
    :func:`overfull_palettes`.
    """
    h, cap = state.h, log_bound(state.n)
    out = []
    for v, nd in enumerate(state.nodes, start=1):
        for k, colors in nd.gathered.items():
            c = len(colors)
            if c > quota(k, state.n):
                continue
            lhs, rhs = d_k(k, c, h), h * cap * (1 << k)
            if not leq(lhs, rhs):
                out.append((v, k, lhs, rhs))
    return out


def counter_bound_violations(state: EngineState) -> list[tuple[str, int, int, float, float]]:
    """Prefix sums of ``w`` and ``s`` against ``8h ln(4en) 2^l`` and ``16h ln(4en) 2^l``.

    Only meaningful for runs in which the potential never exceeded ``n``.
    """
    h, cap = state.h, log_bound(state.n)
    out = []
    for v, nd in enumerate(state.nodes, start=1):
        top = max([0, *nd.w, *nd.s])
        w_acc = s_acc = 0
        for level in range(top + 1):
            w_acc += nd.w.get(level, 0)
            s_acc += nd.s.get(level, 0)
            w_cap = 8 * h * cap * (1 << level)
            s_cap = 16 * h * cap * (1 << level)
            if not leq(w_acc, w_cap):
                out.append(("w", v, level, w_acc, w_cap))
            if not leq(s_acc, s_cap):
                out.append(("s", v, level, s_acc, s_cap))
    return out


def _w_prefix_totals(state: EngineState) -> tuple[list[int], list[int]]:
    """Sorted phase levels and the running total of ``w`` over all nodes up to each."""
    totals: dict[int, int] = {}
    for nd in state.nodes:
        for k, c in nd.w.items():
            totals[k] = totals.get(k, 0) + c
    levels = sorted(totals)
    return levels, list(itertools.accumulate(totals[k] for k in levels))


def _charge_cap(levels: list[int], running: list[int], top: int) -> int:
    i = bisect.bisect_right(levels, top)
    return running[i - 1] if i else 0


def charging_violations(state: EngineState) -> list[tuple[int, int, int, int]]:
    """``s_il <= sum_j sum_{r <= l-h} w_jr`` for every node and phase."""
    levels, running = _w_prefix_totals(state)
    out = []
    for v, nd in enumerate(state.nodes, start=1):
        for level, s in nd.s.items():
            rhs = _charge_cap(levels, running, level - state.h)
            if s > rhs:
                out.append((v, level, s, rhs))
    return out


# -- standalone numeric inequalities ---------------------------------------


def harmonic_gap_violations(k_max: int = 24, n_max: int = 1024, slack: float = 1e-12) -> list[tuple]:
    """``H(2^k) - H(2^k - q_k) <= ln(4en)`` over the ``(k, n)`` grid."""
    out = []
    for n in range(1, n_max + 1):
        cap = log_bound(n)
        for k in range(k_max + 1):
            gap = harmonic_gap(k, n)
            if gap > cap + slack:
                out.append((k, n, gap, cap))
    return out


def mixture_sides(eps: float, alpha: float, x: float) -> tuple[mpmath.mpf, mpmath.mpf]:
    """Both sides of ``E[e^X] <= e^(x - eps/2)``, evaluated at 50 significant digits."""
    with mpmath.workdps(50):
        eps, alpha, x = mpmath.mpf(eps), mpmath.mpf(alpha), mpmath.mpf(x)
        lhs = alpha * mpmath.exp(x - eps / alpha) + (1 - alpha) * mpmath.exp(x)
        rhs = mpmath.exp(x - eps / 2)
    return lhs, rhs


def mixture_violations(trials: int = 10_000, seed: int = 0, slack: float = 1e-12) -> list[tuple]:
    """Random ``eps in [0,1]``, ``alpha in [eps,1]``, ``x in [-10,10]``."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(trials):
        eps = float(rng.uniform(0.0, 1.0))
        alpha = float(rng.uniform(eps, 1.0))
        x = float(rng.uniform(-10.0, 10.0))
        if alpha == 0.0:
            continue
        lhs, rhs = mixture_sides(eps, alpha, x)
        if lhs > rhs + slack:
            out.append((eps, alpha, x, float(lhs), float(rhs)))
    return out


# -- per-step checking -------------------------------------------------------


@dataclass
class StepChecker:
    """Asserts per-step properties of one run; raises on the first violation."""

    state: EngineState
    view: PotentialView
    guided: bool
    potential_held: bool = True
    outcomes: dict[str, str] = field(default_factory=dict)
    _prev_phi: float = 0.0
    _expected: float = 0.0
    _step: int = 0

    def _fail(self, check: str, detail: str) -> None:
        self.outcomes[check] = "fail"
        raise InvariantViolation(self._step, check, detail)

    def before(self, edge: frozenset[int]) -> None:
        self._step = self.state.step + 1
        self._prev_phi = self.view.phi
        self._expected = exact_expected_phi(self.state, self.view, edge)
        if not leq(self._expected, self._prev_phi):
            self._fail(
                "supermartingale",
                f"expected next potential {self._expected!r} > current {self._prev_phi!r}",
            )

    def after(self, edge: frozenset[int], kstar: int, color: int) -> None:
        state, view = self.state, self.view
        n = state.n
        nodes = sorted(edge)
        if counter_identity_violations(state, nodes):
            self._fail("counter-identity", f"w+s != degree for nodes {nodes}")
        if cascade_violations(state, nodes):
            self._fail("phase-cascade", f"a node of {nodes} holds its full current quota")
        # scores of untouched nodes did not move, so rescoring the edge suffices
        ez = list(view.ez)
        for v in nodes:
            z = node_score(state, v)
            if not math.isclose(z, view.z[v - 1], rel_tol=SLACK, abs_tol=SLACK):
                self._fail("score-drift", f"node {v}: incremental {view.z[v - 1]!r} vs {z!r}")
            ez[v - 1] = math.exp(z)
        scratch = math.fsum(ez)
        if abs(scratch - view.phi) > SLACK * scratch:
            self._fail("potential-drift", f"incremental {view.phi!r} vs scratch {scratch!r}")
        if self.guided:
            if not leq(view.phi, n):
                self._fail("potential-invariant", f"potential {view.phi!r} > n = {n}")
            if not leq(view.phi, self._expected):
                self._fail(
                    "argmin-below-mean",
                    f"chosen potential {view.phi!r} > expectation {self._expected!r}",
                )
        if not leq(view.phi, n):
            self.potential_held = False
        if self.potential_held:
            cap = math.log(n)
            for v in nodes:
                if not leq(view.z[v - 1], cap):
                    self._fail("score-cap", f"Z_{v} = {view.z[v - 1]!r} > ln n")
        if not gain_bound_holds(state):
            self._fail(
                "gain-bound",
                f"all nodes past phase {min_completed_phase(state)} "
                f"but only {fully_used_count(state)} fully used colors",
            )
        for v in nodes:
            nd = state.nodes[v - 1]
            c = nd.count(kstar)
            if c <= quota(kstar, n) and not leq(
                d_k(kstar, c, state.h), state.h * log_bound(n) * (1 << kstar)
            ):
                self._fail("phase-cost", f"node {v}, palette {kstar}")
        self._check_charging(nodes)

    def _check_charging(self, nodes: list[int]) -> None:
        # only edge nodes' s counters moved this step, and the right side never shrinks
        levels, running = _w_prefix_totals(self.state)
        h = self.state.h
        for v in nodes:
            for level, s in self.state.nodes[v - 1].s.items():
                rhs = _charge_cap(levels, running, level - h)
                if s > rhs:
                    self._fail("charging", f"s[{v},{level}] = {s} > {rhs}")

    def finish(self) -> dict[str, str]:
        state = self.state
        self._step = state.step
        if counter_identity_violations(state):
            self._fail("counter-identity", "w+s != degree at end of run")
        if not gatherers_consistent(state):
            self._fail("gatherer-index", "color index disagrees with node color sets")
        if charging_violations(state):
            self._fail("charging", str(charging_violations(state)[:3]))
        if phase_cost_violations(state):
            self._fail("phase-cost", str(phase_cost_violations(state)[:3]))
        names = [
            "supermartingale",
            "counter-identity",
            "phase-cascade",
            "score-drift",
            "potential-drift",
            "gain-bound",
            "phase-cost",
            "charging",
            "gatherer-index",
        ]
        if self.guided:
            names += ["potential-invariant", "argmin-below-mean"]
        out = {name: "pass" for name in names}
        if self.potential_held:
            bad = counter_bound_violations(state)
            if bad:
                self._fail("counter-bounds", str(bad[:3]))
            out["counter-bounds"] = "pass"
            out["score-cap"] = "pass"
        else:
            out["counter-bounds"] = "skipped"
            out["score-cap"] = "skipped"
        self.outcomes = dict(sorted(out.items()))
        return self.outcomes
