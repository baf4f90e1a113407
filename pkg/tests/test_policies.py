import math
from collections import Counter
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from online_dsc.engine import apply_color, init_state, min_phase
from online_dsc.model import palette_range
from online_dsc.policies import (
    Decision,
    GreedyAux,
    det_policy,
    greedy_policy,
    make_rng,
    rand_policy,
    replay_policy,
)
from online_dsc.potential import (
    advance_view,
    exact_expected_phi,
    phi_after_candidate,
    recompute_phi,
)


def test_rand_singleton_support():
    state = init_state(2)
    rng = make_rng(0)
    for _ in range(50):
        assert rand_policy(state, {1, 2}, rng) == Decision(0, 1)


def test_rand_palette_frequency():
    state = init_state(4)  # h = 2, pS = 0
    rng = make_rng(123)
    draws = 10**5
    zeros = sum(rand_policy(state, {1}, rng).kstar == 0 for _ in range(draws))
    sigma = math.sqrt(draws * 0.25)
    assert abs(zeros - draws / 2) <= 3 * sigma


def test_rand_color_uniform_within_palette():
    state = init_state(4)
    rng = make_rng(5)
    counts = Counter(rand_policy(state, {1}, rng).color for _ in range(40_000))
    # colors 2 and 3 each carry probability 1/4, color 1 carries 1/2
    assert set(counts) == {1, 2, 3}
    for color, p in ((1, 0.5), (2, 0.25), (3, 0.25)):
        sigma = math.sqrt(40_000 * p * (1 - p))
        assert abs(counts[color] - 40_000 * p) <= 4 * sigma


def test_rand_law_matches_two_stage_distribution():
    # the law induced by one uniform palette index and one uniform color index
    state = init_state(8)  # h = 3
    state.nodes[0].phase = 1
    edge = {1}
    ps, h = min_phase(state, edge), state.h
    law = {}
    for j in range(h):
        k = ps + j
        lo, hi = palette_range(k)
        for color in range(lo, hi + 1):
            law[(k, color)] = Fraction(1, h * 2**k)
    assert sum(law.values()) == 1
    rng = make_rng(9)
    seen = Counter((d.kstar, d.color) for d in (rand_policy(state, edge, rng) for _ in range(30_000)))
    assert set(seen) <= set(law)
    for key, p in law.items():
        p = float(p)
        sigma = math.sqrt(30_000 * p * (1 - p))
        assert abs(seen[key] - 30_000 * p) <= 5 * sigma


def test_rand_determinism():
    state = init_state(16)
    rng1, rng2 = make_rng(77), make_rng(77)
    seq1 = [rand_policy(state, {1, 2}, rng1) for _ in range(100)]
    seq2 = [rand_policy(state, {1, 2}, rng2) for _ in range(100)]
    assert seq1 == seq2


def test_det_first_step():
    state = init_state(2)
    view = recompute_phi(state)
    d = det_policy(state, view, {1, 2})
    assert (d.kstar, d.color) == (0, 1)
    assert d.candidate_count == 1
    phi = advance_view(view, state, {1, 2}, d.kstar, d.color)
    assert math.isclose(phi, 2 * math.exp(-0.25), rel_tol=1e-15)


def test_det_prefers_color_granting_candidate():
    state = init_state(2)  # h = 1, palette 0 has one color
    apply_color(state, {1}, 0, 1)  # node 1 moves to phase 1
    apply_color(state, {2}, 0, 1)
    apply_color(state, {1}, 1, 2)
    view = recompute_phi(state)
    edge = {1, 2}
    d = det_policy(state, view, edge)
    # palette 1 = {2, 3} and node 1 already holds 2
    assert (d.kstar, d.color) == (1, 3)
    scores = {c: phi_after_candidate(state, view, edge, 1, c) for c in (2, 3)}
    assert scores[3] < scores[2]


def run_det(n, edges, exhaustive=False):
    state = init_state(n)
    view = recompute_phi(state)
    out = []
    for edge in edges:
        expected = exact_expected_phi(state, view, edge)
        prev = view.phi
        d = det_policy(state, view, edge, exhaustive=exhaustive)
        phi = advance_view(view, state, edge, d.kstar, d.color)
        apply_color(state, edge, d.kstar, d.color)
        out.append((d, prev, expected, phi))
    return state, out


edge_lists = st.integers(1, 8).flatmap(
    lambda n: st.tuples(st.just(n), st.lists(st.sets(st.integers(1, n), min_size=1).map(frozenset), max_size=30))
)


@settings(max_examples=80, deadline=None)
@given(edge_lists)
def test_det_is_argmin_below_mean_and_safe(case):
    n, edges = case
    _, steps = run_det(n, edges)
    for d, prev, expected, phi in steps:
        assert phi <= expected + 1e-9 * max(1, expected)
        assert phi <= n * (1 + 1e-9)
        assert d.margin >= prev - expected - 1e-9
        assert math.isclose(d.margin, prev - phi, rel_tol=1e-12, abs_tol=1e-12)


@settings(max_examples=60, deadline=None)
@given(edge_lists)
def test_det_classed_equals_exhaustive(case):
    n, edges = case
    a, steps_a = run_det(n, edges)
    b, steps_b = run_det(n, edges, exhaustive=True)
    assert [(d.kstar, d.color) for d, *_ in steps_a] == [(d.kstar, d.color) for d, *_ in steps_b]


def test_det_exhaustive_scan_minimizes():
    rng = np.random.default_rng(4)
    state = init_state(5)
    view = recompute_phi(state)
    for _ in range(60):
        edge = frozenset(int(v) for v in rng.choice(np.arange(1, 6), size=int(rng.integers(1, 6)), replace=False))
        d = det_policy(state, view, edge)
        ps = min_phase(state, edge)
        best = min(
            (phi_after_candidate(state, view, edge, k, c), k, c)
            for k in range(ps, ps + state.h)
            for c in range(palette_range(k)[0], palette_range(k)[1] + 1)
        )
        assert phi_after_candidate(state, view, edge, d.kstar, d.color) == best[0]
        advance_view(view, state, edge, d.kstar, d.color)
        apply_color(state, edge, d.kstar, d.color)


def test_greedy_examples():
    aux = GreedyAux(2)
    assert [greedy_policy(aux, e) for e in ({1}, {2}, {1}, {2})] == [1, 1, 2, 2]
    aux = GreedyAux(3)
    assert [greedy_policy(aux, {1, 2, 3}) for _ in range(4)] == [1, 2, 3, 4]
    aux = GreedyAux(3)
    assert {greedy_policy(aux, e) for e in ({1}, {2}, {1, 2}) * 3} == {1}


def test_replay_policy():
    trace = [{"step": 1, "kstar": 0, "color": 1}, {"step": 2, "kstar": 1, "color": 3}]
    assert [(d.kstar, d.color) for d in replay_policy(trace)] == [(0, 1), (1, 3)]
    with pytest.raises(ValueError):
        list(replay_policy([{"step": 1, "kstar": None, "color": 1}]))


def unscreened_choice(state, view, edge):
    from online_dsc.potential import EdgeTerms

    terms = EdgeTerms(state, view, edge)
    keys = []
    for k in terms.window():
        color = terms.first_fresh(k)
        if color is not None:
            keys.append((terms.phi_for_pattern(k, (False,) * len(terms.nodes)), k, 0, color))
            continue
        for pattern, color in terms.color_classes(k):
            keys.append((terms.phi_for_pattern(k, pattern), k, sum(pattern), color))
    best = min(keys)
    return best[1], best[3]


@pytest.mark.parametrize(
    "n, m, size, seed", [(32, 800, 8, 1), (5, 2000, 2, 3), (12, 1500, 11, 4)]
)
def test_screening_keeps_exact_argmin(n, m, size, seed):
    from online_dsc.generators import gen_uniform

    inst = gen_uniform(n, m, size, seed)
    state = init_state(n)
    view = recompute_phi(state)
    for edge in inst.edges:
        d = det_policy(state, view, edge)
        assert (d.kstar, d.color) == unscreened_choice(state, view, edge)
        advance_view(view, state, edge, d.kstar, d.color)
        apply_color(state, edge, d.kstar, d.color)
