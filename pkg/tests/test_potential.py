import math
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from online_dsc.engine import apply_color, init_state, min_phase
from online_dsc.model import palette_range, quota
from online_dsc.potential import (
    CapacityError,
    EdgeTerms,
    advance_view,
    check_growth_probability,
    d_k,
    exact_expected_phi,
    harmonic,
    harmonic_gap,
    log_bound,
    naive_expected_phi,
    node_score,
    phi_after_candidate,
    recompute_phi,
)


def d_exact(k, m, h):
    return h * sum(Fraction(2**k, 2**k - j + 1) for j in range(1, m + 1))


@pytest.mark.parametrize("k, m, h, want", [(0, 0, 1, 0.0), (5, 0, 3, 0.0), (0, 1, 2, 2.0), (1, 2, 2, 6.0)])
def test_d_k_examples(k, m, h, want):
    assert d_k(k, m, h) == want


def test_d_k_domain():
    with pytest.raises(ValueError):
        d_k(2, 5, 1)
    with pytest.raises(ValueError):
        d_k(2, -1, 1)


@given(st.integers(0, 9), st.data())
def test_d_k_matches_rational_sum(k, data):
    m = data.draw(st.integers(0, 2**k))
    h = data.draw(st.integers(1, 6))
    assert math.isclose(d_k(k, m, h), float(d_exact(k, m, h)), rel_tol=1e-13, abs_tol=0.0)


def test_d_k_is_expected_draws_times_h():
    # collecting all 2^k colors takes 2^k H(2^k) draws on average
    assert math.isclose(d_k(6, 64, 1), 64 * harmonic(64), rel_tol=1e-13)


def test_harmonic_gap_examples():
    assert harmonic_gap(0, 2) == 1.0
    want = float(sum(Fraction(1, j) for j in range(2, 9)))  # H(8) - H(1), q_3 = 7 for n = 4
    assert math.isclose(harmonic_gap(3, 4), want, rel_tol=1e-15)
    assert harmonic_gap(3, 4) <= log_bound(4)


def test_harmonic_large_index_continuity():
    m = 1 << 20
    direct = harmonic(m)
    tail = math.log(m + 1) + 0.5772156649015329 + 1 / (2 * (m + 1)) - 1 / (12 * (m + 1) ** 2)
    assert math.isclose(harmonic(m + 1), direct + 1 / (m + 1), rel_tol=1e-15)
    assert math.isclose(harmonic(m + 1), tail, rel_tol=1e-15)
    assert harmonic(0) == 0.0


def test_initial_potential_is_n():
    for n in (1, 2, 3, 17):
        assert recompute_phi(init_state(n)).phi == n


def test_single_node_score_example():
    state = init_state(1)
    state.nodes[0].w[0] = 1
    view = recompute_phi(state)
    assert view.z == [0.25]
    assert view.phi == math.exp(0.25)


def test_two_node_first_candidate():
    state = init_state(2)
    view = recompute_phi(state)
    want = 2 * math.exp(-0.25)
    assert math.isclose(phi_after_candidate(state, view, {1, 2}, 0, 1), want, rel_tol=1e-15)
    assert math.isclose(exact_expected_phi(state, view, {1, 2}), want, rel_tol=1e-15)
    apply_color(state, {1, 2}, 0, 1)
    assert math.isclose(recompute_phi(state).phi, want, rel_tol=1e-15)


def test_held_candidate_raises_potential_by_bump():
    state = init_state(4)  # h = 2
    apply_color(state, {1, 2}, 1, 2)
    view = recompute_phi(state)
    edge = {1, 2}
    ps = min_phase(state, edge)
    bump = sum(
        view.ez[v - 1] * (math.exp(1 / (4 * state.h * 2 ** state.nodes[v - 1].phase)) - 1)
        for v in edge
        if state.nodes[v - 1].phase <= ps + state.h - 1
    )
    got = phi_after_candidate(state, view, edge, 1, 2)
    assert got > view.phi
    assert math.isclose(got - view.phi, bump, rel_tol=1e-9)


def walk(n, edges, seed):
    import numpy as np

    rng = np.random.default_rng(seed)
    state = init_state(n)
    for edge in edges:
        ps = min_phase(state, edge)
        k = ps + int(rng.integers(state.h))
        lo, _ = palette_range(k)
        yield state, edge
        apply_color(state, edge, k, lo + int(rng.integers(2**k)))


edge_lists = st.integers(1, 6).flatmap(
    lambda n: st.tuples(st.just(n), st.lists(st.sets(st.integers(1, n), min_size=1), max_size=25), st.integers(0, 99))
)


@settings(max_examples=60, deadline=None)
@given(edge_lists)
def test_candidates_match_recompute(case):
    n, edges, seed = case
    for state, edge in walk(n, [frozenset(e) for e in edges], seed):
        view = recompute_phi(state)
        ps = min_phase(state, edge)
        for k in range(ps, ps + state.h):
            lo, hi = palette_range(k)
            for color in {lo, hi, (lo + hi) // 2}:
                got = phi_after_candidate(state, view, edge, k, color)
                want = recompute_phi(apply_color(state.snapshot(), edge, k, color)).phi
                assert math.isclose(got, want, rel_tol=1e-9)


@settings(max_examples=60, deadline=None)
@given(edge_lists)
def test_expectation_matches_naive_and_is_supermartingale(case):
    n, edges, seed = case
    for state, edge in walk(n, [frozenset(e) for e in edges], seed):
        view = recompute_phi(state)
        exact = exact_expected_phi(state, view, edge)
        assert exact <= view.phi + 1e-9
        if sum(2**k for k in range(min_phase(state, edge), min_phase(state, edge) + state.h)) <= 256:
            assert math.isclose(exact, naive_expected_phi(state, edge), rel_tol=1e-9)


@settings(max_examples=60, deadline=None)
@given(edge_lists)
def test_incremental_view_tracks_scratch(case):
    n, edges, seed = case
    import numpy as np

    rng = np.random.default_rng(seed)
    state = init_state(n)
    view = recompute_phi(state)
    for edge in map(frozenset, edges):
        ps = min_phase(state, edge)
        k = ps + int(rng.integers(state.h))
        color = palette_range(k)[0] + int(rng.integers(2**k))
        advance_view(view, state, edge, k, color)
        apply_color(state, edge, k, color)
        scratch = recompute_phi(state)
        assert math.isclose(view.phi, scratch.phi, rel_tol=1e-9)
        for a, b in zip(view.z, scratch.z):
            assert math.isclose(a, b, rel_tol=1e-9, abs_tol=1e-12)


def test_node_score_formula():
    state = init_state(4)
    apply_color(state, {1, 2}, 0, 1)
    apply_color(state, {1}, 1, 3)
    nd = state.nodes[0]
    h = state.h
    want = sum(
        (nd.w.get(k, 0) - 2 * float(d_exact(k, nd.count(k), h))) / (4 * h * 2**k) for k in (0, 1)
    )
    assert math.isclose(node_score(state, 1), want, rel_tol=1e-14)


def test_growth_probability_examples():
    state = init_state(4)  # h = 2
    assert check_growth_probability(state, {1, 2}, 1) == Fraction(1, 2)
    # node 1 to phase 1 holding one color of palette 1, node 2 still at phase 0
    apply_color(state, {1}, 1, 2)
    apply_color(state, {1}, 0, 1)
    assert state.nodes[0].phase == 1 and state.nodes[0].count(1) == 1
    assert check_growth_probability(state, {1, 2}, 1) == Fraction(1, 4)
    # h = 1: node 1 at phase 1 is outside the window [0, 0] fixed by node 2
    state = init_state(2)
    apply_color(state, {1}, 0, 1)
    assert check_growth_probability(state, {1, 2}, 1) == 0
    with pytest.raises(ValueError):
        check_growth_probability(state, {2}, 1)


def test_capacity_errors():
    state = init_state(2)
    for nd in state.nodes:
        nd.phase = 21
    with pytest.raises(CapacityError):
        naive_expected_phi(state, {1, 2})
    with pytest.raises(CapacityError):
        check_growth_probability(state, {1, 2}, 1)
    # the closed-form expectation has no size limit
    view = recompute_phi(state)
    assert exact_expected_phi(state, view, {1, 2}) <= view.phi


def test_color_classes_cover_palette():
    state = init_state(8)  # h = 3
    apply_color(state, {1, 2}, 2, 4)
    apply_color(state, {2, 3}, 2, 5)
    apply_color(state, {1, 2, 3}, 2, 7)
    terms = EdgeTerms(state, recompute_phi(state), {1, 2, 3})
    classes = dict(terms.color_classes(2))
    assert classes == {
        (True, True, False): 4,
        (False, True, True): 5,
        (False, False, False): 6,
        (True, True, True): 7,
    }
    assert terms.first_fresh(2) == 6


def test_quota_never_exceeds_palette():
    for n in (1, 2, 7, 64):
        for k in range(12):
            assert quota(k, n) <= 2**k
