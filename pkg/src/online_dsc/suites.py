"""Named verification suites and the shared instance corpus."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterator

import numpy as np

from .checks import harmonic_gap_violations, mixture_violations
from .engine import EngineState, apply_color, init_state, min_phase
from .generators import GeneratorSpec, gen_planted, gen_uniform
from .model import InstanceSpec
from .oracle import exact_opt, naive_opt
from .policies import det_policy, make_rng, rand_policy
from .potential import (
    advance_view,
    check_growth_probability,
    d_k,
    exact_expected_phi,
    naive_expected_phi,
    recompute_phi,
)
from .runner import run_instance

SUITES = ("claims", "supermartingale", "counters", "gain", "replay", "oracle")
COUPON_GRID = ((4, 10), (6, 50), (8, 200))


@dataclass
class SuiteReport:
    suite: str
    checked: int = 0
    failures: list[dict] = field(default_factory=list)
    notes: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return not self.failures

    def to_json(self) -> dict:
        return {
            "suite": self.suite,
            "passed": self.passed,
            "checked": self.checked,
            "failures": self.failures,
            **self.notes,
        }


def corpus(quick: bool = False) -> list[GeneratorSpec]:
    """Planted, uniform and starved instances with ``n`` in 2..64 and up to 10^4 edges.

    ``quick`` keeps every shape but shrinks sizes for fast smoke runs.
    """
    ns = [2, 3, 4, 5, 6, 7, 8, 10, 11, 13, 16, 20, 23, 27, 32, 40, 45, 52, 64]
    specs: list[GeneratorSpec] = []
    for i, n in enumerate(ns):
        for covers, seed in ((4, 1), (24, 2), (96, 3)):
            if covers * n > 2 * 10**4:
                covers //= 4
            specs.append(GeneratorSpec("planted", n, covers, seed=100 * i + seed))
        sizes = sorted({1, max(1, n // 4), max(1, n // 2), n})
        for j, size in enumerate(sizes):
            m = (400, 1500, 3000, 800)[j % 4]
            specs.append(GeneratorSpec("uniform", n, m, edge_size=size, seed=100 * i + 10 + j))
        for m, seed in ((50, 0), (900, 1), (4000, 2)):
            specs.append(GeneratorSpec("starved", n, m, seed=seed))
    # a few long runs at the top of the edge budget
    for n, size in ((2, 1), (4, 2), (8, 3), (16, 4), (32, 8), (64, 16)):
        specs.append(GeneratorSpec("uniform", n, 10**4, edge_size=size, seed=7 + n))
    specs.append(GeneratorSpec("starved", 3, 10**4))
    specs.append(GeneratorSpec("starved", 16, 10**4))
    for n, m in ((2, 9), (5, 17), (12, 40), (3, 6), (7, 25), (9, 60), (14, 33), (20, 120), (30, 90)):
        specs.append(GeneratorSpec("uniform", n, m, edge_size=max(1, n // 3), seed=n))
    for n in (2, 3, 9, 24):
        specs.append(GeneratorSpec("planted", n, 1, seed=n))
    if quick:
        specs = [_shrink(s) for s in specs[::6]]
    return specs


def _shrink(spec: GeneratorSpec) -> GeneratorSpec:
    m = max(1, min(spec.m, 8 if spec.kind == "planted" else 300))
    return GeneratorSpec(spec.kind, spec.n, m, spec.edge_size, spec.seed)


def walk_states(
    instance: InstanceSpec, policy: str = "rand", seed: int = 0
) -> Iterator[tuple[EngineState, frozenset[int]]]:
    """Yield every reachable ``(state, arriving edge)`` pair of one run.

    The yielded state is live; callers that keep it must snapshot it.
    """
    state = init_state(instance.n)
    view = recompute_phi(state)
    rng = make_rng(seed)
    for edge in instance.edges:
        yield state, edge
        if policy == "det":
            d = det_policy(state, view, edge)
        else:
            d = rand_policy(state, edge, rng)
        advance_view(view, state, edge, d.kstar, d.color)
        apply_color(state, edge, d.kstar, d.color)


def state_sample_instances(seed: int = 0, count: int = 40) -> list[InstanceSpec]:
    rng = np.random.default_rng(seed)
    out = []
    for i in range(count):
        n = int(rng.integers(2, 17))
        if i % 2:
            out.append(gen_planted(n, int(rng.integers(2, 6)), seed + i))
        else:
            size = int(rng.integers(1, n + 1))
            out.append(gen_uniform(n, int(rng.integers(30, 90)), size, seed + i))
    return out


def enumerable(state: EngineState, edge: frozenset[int], limit: int = 512) -> bool:
    ps = min_phase(state, edge)
    return sum(1 << k for k in range(ps, ps + state.h)) <= limit


def supermartingale_suite(seed: int = 0, target: int = 1000, quick: bool = False) -> SuiteReport:
    """Exact next-step expectation never exceeds the current potential."""
    report = SuiteReport("supermartingale")
    naive_checked = 0
    growth_checked = 0
    target = 120 if quick else target
    for idx, inst in enumerate(state_sample_instances(seed)):
        policy = "det" if idx % 3 == 0 else "rand"
        for state, edge in walk_states(inst, policy, seed + idx):
            view = recompute_phi(state)
            expected = exact_expected_phi(state, view, edge)
            report.checked += 1
            if not expected <= view.phi + 1e-9:
                report.failures.append(
                    {"kind": "expectation", "step": state.step, "expected": expected, "phi": view.phi}
                )
            if state.step % 5 == 0 and enumerable(state, edge):
                naive = naive_expected_phi(state, edge)
                naive_checked += 1
                if abs(naive - expected) > 1e-9 * max(1.0, naive):
                    report.failures.append(
                        {"kind": "naive", "step": state.step, "naive": naive, "exact": expected}
                    )
            if state.step % 7 == 3 and enumerable(state, edge, 2048):
                for v in sorted(edge):
                    bad = growth_mismatch(state, edge, v)
                    growth_checked += 1
                    if bad:
                        report.failures.append(bad)
        if report.checked >= target:
            break
    report.notes = {"naiveChecked": naive_checked, "growthChecked": growth_checked}
    return report


def growth_expected(state: EngineState, edge: frozenset[int], node: int) -> Fraction:
    """Closed form for the probability that ``node`` gathers a new color of its phase."""
    nd = state.nodes[node - 1]
    ps, p, h = min_phase(state, edge), nd.phase, state.h
    if p > ps + h - 1:
        return Fraction(0)
    return Fraction((1 << p) - nd.count(p), h * (1 << p))


def growth_mismatch(state: EngineState, edge: frozenset[int], node: int) -> dict | None:
    got = check_growth_probability(state, edge, node)
    want = growth_expected(state, edge, node)
    if got == want:
        return None
    return {"kind": "growth", "step": state.step, "node": node, "enumerated": str(got), "closedForm": str(want)}


def claims_suite(quick: bool = False) -> SuiteReport:
    report = SuiteReport("claims")
    bad1 = harmonic_gap_violations(k_max=12 if quick else 24, n_max=64 if quick else 1024)
    trials = 500 if quick else 10_000
    bad2 = mixture_violations(trials=trials)
    report.checked = (13 * 64 if quick else 25 * 1024) + trials
    report.failures += [{"check": "harmonic-gap", "k": k, "n": n, "gap": g, "cap": c} for k, n, g, c in bad1]
    report.failures += [
        {"check": "exp-mixture", "eps": e, "alpha": a, "x": x, "lhs": lhs, "rhs": rhs}
        for e, a, x, lhs, rhs in bad2
    ]
    return report


def coupon_draws(k: int, m: int, trials: int, seed: int = 0) -> np.ndarray:
    """Draws needed to see ``m`` distinct colors from a palette of ``2^k``, per trial."""
    size = 1 << k
    if not 0 <= m <= size:
        raise ValueError(f"cannot collect {m} distinct colors from {size}")
    rng = np.random.default_rng(seed)
    seen = np.zeros((trials, size), dtype=bool)
    distinct = np.zeros(trials, dtype=np.int64)
    draws = np.zeros(trials, dtype=np.int64)
    rows = np.arange(trials)
    active = distinct < m
    while active.any():
        idx = rows[active]
        picks = rng.integers(size, size=idx.size)
        fresh = ~seen[idx, picks]
        seen[idx, picks] = True
        distinct[idx] += fresh
        draws[idx] += 1
        active = distinct < m
    return draws


def coupon_check(k: int, m: int, trials: int = 10_000, seed: int = 0) -> dict:
    draws = coupon_draws(k, m, trials, seed)
    mean = float(draws.mean())
    se = float(draws.std(ddof=1) / np.sqrt(trials))
    want = d_k(k, m, 1)
    return {"k": k, "m": m, "mean": mean, "se": se, "expected": want, "ok": abs(mean - want) <= 3 * se}


def _corpus_runs(quick: bool, check: bool = True) -> Iterator[tuple[GeneratorSpec, dict]]:
    for spec in corpus(quick):
        yield spec, run_instance(spec.build(), "det", check=check).report


def counters_suite(quick: bool = False) -> SuiteReport:
    """Counter bounds and charging on DET corpus runs, plus nonzero ``s`` on starved inputs."""
    report = SuiteReport("counters")
    s_nonzero = 0
    for spec in corpus(quick):
        result = run_instance(spec.build(), "det", check=True)
        report.checked += 1
        checks = result.report["checks"]
        for name in ("counter-bounds", "charging", "counter-identity"):
            if checks.get(name) != "pass":
                report.failures.append({"instance": _label(spec), "check": name, "outcome": checks.get(name)})
        if spec.kind == "starved" and any(any(nd.s.values()) for nd in result.state.nodes):
            s_nonzero += 1
    report.notes = {"starvedWithSCounters": s_nonzero}
    return report


def gain_suite(quick: bool = False) -> SuiteReport:
    """Gain bound at every step and the competitive verdict at the end of each DET run."""
    report = SuiteReport("gain")
    for spec, rep in _corpus_runs(quick):
        report.checked += 1
        if rep["checks"].get("gain-bound") != "pass" or rep["gainBound"] != "holds":
            report.failures.append({"instance": _label(spec), "check": "gain-bound"})
        if rep["competitiveVerdict"] != "holds":
            report.failures.append({"instance": _label(spec), "check": "competitive", **rep["competitive"]})
        if rep["competitive"]["optHolds"] is False:
            report.failures.append({"instance": _label(spec), "check": "competitive-opt", **rep["competitive"]})
    return report


def replay_suite(quick: bool = False) -> SuiteReport:
    """Two identical runs give identical traces, and replay reproduces the report."""
    report = SuiteReport("replay")
    specs = corpus(quick)[:: 4 if quick else 8]
    for spec in specs:
        inst = spec.build()
        for policy, seed in (("det", 0), ("rand", spec.seed + 1)):
            report.checked += 1
            problem = determinism_problem(inst, policy, seed)
            if problem:
                report.failures.append({"instance": _label(spec), "policy": policy, "problem": problem})
    return report


def comparable(report: dict) -> dict:
    """Report minus the fields naming how decisions were made."""
    return {k: v for k, v in report.items() if k not in ("policy", "seed", "rng", "nearTies")}


def determinism_problem(inst: InstanceSpec, policy: str, seed: int) -> str | None:
    first = run_instance(inst, policy, seed)
    second = run_instance(inst, policy, seed)
    lines = [e.line() for e in first.trace]
    if lines != [e.line() for e in second.trace]:
        return "traces differ between runs"
    if first.report != second.report:
        return "reports differ between runs"
    replayed = run_instance(inst, "replay", replay=[e.to_json() for e in first.trace])
    if [e.line() for e in replayed.trace] != lines:
        return "replayed trace differs"
    if comparable(replayed.report) != comparable(first.report):
        return "replayed report differs"
    return None


def random_small_instance(rng: np.random.Generator, max_edges: int = 8) -> InstanceSpec:
    n = int(rng.integers(1, 6))
    m = int(rng.integers(0, max_edges + 1))
    edges = []
    for _ in range(m):
        size = int(rng.integers(1, n + 1))
        edges.append(rng.choice(np.arange(1, n + 1), size=size, replace=False).tolist())
    return InstanceSpec.build(n, edges)


def oracle_suite(seed: int = 0, quick: bool = False) -> SuiteReport:
    report = SuiteReport("oracle")
    rng = np.random.default_rng(seed)
    for _ in range(15 if quick else 50):
        inst = random_small_instance(rng)
        report.checked += 1
        fast, slow = exact_opt(inst).opt, naive_opt(inst)
        if fast != slow:
            report.failures.append({"instance": inst.to_json(), "exactOpt": fast, "naive": slow})
    planted = 0
    for n, covers in itertools.product((1, 2, 3, 4, 5, 6), (1, 2, 3, 4)):
        for s in range(3):
            inst = gen_planted(n, covers, seed * 31 + s)
            if inst.m > 14:
                continue
            planted += 1
            report.checked += 1
            result = exact_opt(inst, budget=14)
            if not result.exact or result.opt < covers:
                report.failures.append({"instance": inst.to_json(), "covers": covers, "opt": result.opt})
    report.notes = {"plantedChecked": planted}
    return report


def _label(spec: GeneratorSpec) -> str:
    return f"{spec.kind}:n={spec.n},m={spec.m},size={spec.edge_size},seed={spec.seed}"


RUNNERS: dict[str, Callable[..., SuiteReport]] = {
    "claims": lambda quick=False, seed=0: claims_suite(quick),
    "supermartingale": lambda quick=False, seed=0: supermartingale_suite(seed, quick=quick),
    "counters": lambda quick=False, seed=0: counters_suite(quick),
    "gain": lambda quick=False, seed=0: gain_suite(quick),
    "replay": lambda quick=False, seed=0: replay_suite(quick),
    "oracle": lambda quick=False, seed=0: oracle_suite(seed, quick),
}


def run_suite(name: str, quick: bool = False, seed: int = 0) -> SuiteReport:
    if name not in RUNNERS:
        raise ValueError(f"unknown suite {name!r}; expected one of {SUITES}")
    return RUNNERS[name](quick=quick, seed=seed)
