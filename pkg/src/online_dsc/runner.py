"""Drive an instance through the engine under one policy."""

from __future__ import annotations

import json
import time
from dataclasses import dataclass
from typing import Iterable

from .checks import InvariantViolation, StepChecker, gain_bound_holds, leq
from .engine import (
    EngineState,
    apply_color,
    fully_used_count,
    init_state,
    min_completed_phase,
    min_phase,
)
from .model import InstanceSpec
from .oracle import DEFAULT_BUDGET, competitive_check, exact_opt
from .policies import (
    RNG_NAME,
    GreedyAux,
    det_policy,
    greedy_policy,
    make_rng,
    rand_policy,
    replay_policy,
)
from .potential import PotentialView, advance_view, recompute_phi, sync_view

POLICIES = ("det", "rand", "greedy", "replay")
RESYNC_EVERY = 1024


class ReplayError(ValueError):
    def __init__(self, step: int, detail: str) -> None:
        super().__init__(f"replay diverged at step {step}: {detail}")
        self.step = step


@dataclass
class TraceEntry:
    step: int
    edge: list[int]
    pS: int | None
    kstar: int | None
    color: int
    phiAfter: float | None

    def to_json(self) -> dict:
        return {
            "step": self.step,
            "edge": self.edge,
            "pS": self.pS,
            "kstar": self.kstar,
            "color": self.color,
            "phiAfter": self.phiAfter,
        }

    def line(self) -> str:
        return json.dumps(self.to_json(), separators=(",", ":"))


def write_trace(trace: Iterable[TraceEntry], path: str) -> None:
    with open(path, "w") as fh:
        for entry in trace:
            fh.write(entry.line() + "\n")


def read_trace(path: str) -> list[dict]:
    with open(path) as fh:
        return [json.loads(line) for line in fh if line.strip()]


@dataclass
class RunResult:
    report: dict
    trace: list[TraceEntry]
    state: EngineState | None
    view: PotentialView | None


def run_instance(
    instance: InstanceSpec,
    policy: str = "det",
    seed: int = 0,
    *,
    check: bool = False,
    exhaustive: bool = False,
    replay: list[dict] | None = None,
    timing: bool = False,
    opt_budget: int = DEFAULT_BUDGET,
) -> RunResult:
    """Feed every edge of ``instance`` to ``policy`` and summarize the run.

    The potential-guided policy always aborts with :class:`InvariantViolation`
    if the potential ever exceeds ``n``; ``check`` adds every per-step
    property check.
    """
    if policy not in POLICIES:
        raise ValueError(f"unknown policy {policy!r}; expected one of {POLICIES}")
    started = time.perf_counter()
    if policy == "greedy":
        trace, gain, extra = _run_greedy(instance)
        state = view = None
    else:
        state, view, trace, extra = _run_engine(instance, policy, seed, check, exhaustive, replay)
        gain = fully_used_count(state)

    offline = exact_opt(instance, opt_budget)
    verdict = competitive_check(gain, offline, instance.n)
    report = {
        "instance": instance.digest(),
        "n": instance.n,
        "m": instance.m,
        "policy": policy,
        "seed": seed if policy == "rand" else None,
        "rng": RNG_NAME if policy == "rand" else None,
        "gain": gain,
        "minDegree": offline.min_degree,
        **extra,
        "competitiveVerdict": "holds" if verdict.holds else "fails",
        "competitive": verdict.to_json(),
        "offline": offline.to_json(),
    }
    if timing:
        report["wallTime"] = time.perf_counter() - started
    return RunResult(report, trace, state, view)


def _run_greedy(instance: InstanceSpec) -> tuple[list[TraceEntry], int, dict]:
    aux = GreedyAux(instance.n)
    covered: dict[int, set[int]] = {}
    trace = []
    for t, edge in enumerate(instance.edges, start=1):
        color = greedy_policy(aux, edge)
        covered.setdefault(color, set()).update(edge)
        trace.append(TraceEntry(t, sorted(edge), None, None, color, None))
    gain = sum(1 for nodes in covered.values() if len(nodes) == instance.n)
    extra = {
        "minCompletedPhase": None,
        "maxPhi": None,
        "finalPhi": None,
        "nearTies": None,
        "gainBound": None,
    }
    return trace, gain, extra


def _run_engine(
    instance: InstanceSpec,
    policy: str,
    seed: int,
    check: bool,
    exhaustive: bool,
    replay: list[dict] | None,
) -> tuple[EngineState, PotentialView, list[TraceEntry], dict]:
    n = instance.n
    state = init_state(n)
    view = recompute_phi(state)
    rng = make_rng(seed) if policy == "rand" else None
    if policy == "replay":
        if replay is None:
            raise ValueError("replay needs a recorded trace")
        if len(replay) != instance.m:
            raise ReplayError(
                min(len(replay), instance.m) + 1,
                f"trace has {len(replay)} steps, instance has {instance.m} edges",
            )
        decisions = replay_policy(replay)
    checker = StepChecker(state, view, guided=policy == "det") if check else None
    trace: list[TraceEntry] = []
    max_phi = view.phi
    near_ties = 0
    guided = policy == "det"
    for t, edge in enumerate(instance.edges, start=1):
        if checker:
            checker.before(edge)
        if policy == "det":
            decision = det_policy(state, view, edge, exhaustive=exhaustive)
            near_ties += decision.near_tie
        elif policy == "rand":
            decision = rand_policy(state, edge, rng)
        else:
            record = replay[t - 1]
            if sorted(record["edge"]) != sorted(edge):
                raise ReplayError(t, f"recorded edge {record['edge']} != {sorted(edge)}")
            decision = next(decisions)
        ps = min_phase(state, edge)
        phi = advance_view(view, state, edge, decision.kstar, decision.color)
        apply_color(state, edge, decision.kstar, decision.color)
        if view.steps_since_sync >= RESYNC_EVERY:
            sync_view(view, state)
            phi = view.phi
        if policy == "replay":
            record = replay[t - 1]
            if record["pS"] != ps:
                raise ReplayError(t, f"recorded pS {record['pS']} != {ps}")
            if record["phiAfter"] != phi:
                raise ReplayError(t, f"recorded potential {record['phiAfter']!r} != {phi!r}")
        if guided and not leq(phi, n):
            raise InvariantViolation(t, "potential-invariant", f"potential {phi!r} > n = {n}")
        if checker:
            checker.after(edge, decision.kstar, decision.color)
        max_phi = max(max_phi, phi)
        trace.append(TraceEntry(t, sorted(edge), ps, decision.kstar, decision.color, phi))
    extra = {
        "minCompletedPhase": min_completed_phase(state),
        "maxPhi": max_phi,
        "finalPhi": view.phi,
        "nearTies": near_ties if guided else None,
        "gainBound": "holds" if gain_bound_holds(state) else "fails",
    }
    if checker:
        extra["checks"] = checker.finish()
    return state, view, trace, extra
