import json

import pytest
from hypothesis import given, strategies as st

from online_dsc.model import (
    InstanceError,
    InstanceSpec,
    PaletteParams,
    load_instance,
    palette_of,
    palette_range,
    parse_instance,
    quota,
    serialize_instance,
    window_size,
)


@pytest.mark.parametrize("k, want", [(0, (1, 1)), (2, (4, 7)), (3, (8, 15))])
def test_palette_range_examples(k, want):
    assert palette_range(k) == want


def test_palette_range_overflow():
    with pytest.raises(OverflowError):
        palette_range(62)
    assert palette_range(61)[1] == (1 << 62) - 1


@pytest.mark.parametrize("k, n, want", [(0, 4, 1), (3, 4, 7), (2, 2, 3), (0, 1, 1), (1, 1, 1)])
def test_quota_examples(k, n, want):
    assert quota(k, n) == want


@given(st.integers(0, 40), st.integers(1, 10**6))
def test_quota_matches_rational_ceiling(k, n):
    from fractions import Fraction
    import math

    want = math.ceil(Fraction(2 * n - 1, 2 * n) * 2**k)
    assert quota(k, n) == want
    assert 1 <= quota(k, n) <= 2**k


@given(st.integers(1, 2**40))
def test_palette_of_inverts_range(color):
    lo, hi = palette_range(palette_of(color))
    assert lo <= color <= hi


@pytest.mark.parametrize("n, h", [(1, 1), (2, 1), (3, 2), (4, 2), (5, 3), (8, 3), (9, 4), (64, 6), (65, 7)])
def test_window_size(n, h):
    assert window_size(n) == h
    assert PaletteParams.for_nodes(n).h == h


def test_parse_example():
    inst = parse_instance('{"n":2,"edges":[[1,2],[1]]}')
    assert inst == InstanceSpec(2, (frozenset({1, 2}), frozenset({1})))
    assert inst.m == 2
    assert inst.degrees() == [2, 1]
    assert inst.min_degree() == 1


def test_parse_rejects_empty_edge():
    with pytest.raises(InstanceError, match="empty hyperedge at index 0"):
        parse_instance('{"n":2,"edges":[[]]}')


def test_parse_rejects_out_of_range():
    with pytest.raises(InstanceError, match="node id out of range"):
        parse_instance('{"n":2,"edges":[[3]]}')


@pytest.mark.parametrize(
    "text",
    ['{"n":0,"edges":[]}', '{"n":-1,"edges":[]}', '{"edges":[]}', "[1]", "not json", '{"n":2,"edges":[["a"]]}'],
)
def test_parse_rejects_malformed(text):
    with pytest.raises(InstanceError):
        parse_instance(text)


def test_round_trip(tmp_path):
    inst = InstanceSpec.build(3, [[3, 1], [2], [1, 2, 3]])
    path = tmp_path / "inst.json"
    path.write_text(serialize_instance(inst))
    assert load_instance(str(path)) == inst
    assert json.loads(serialize_instance(inst)) == {"n": 3, "edges": [[1, 3], [2], [1, 2, 3]]}


def test_digest_is_stable_and_content_based():
    a = InstanceSpec.build(2, [[1], [2, 1]])
    b = parse_instance('{"n":2,"edges":[[1],[1,2]]}')
    assert a.digest() == b.digest()
    assert a.digest() != InstanceSpec.build(2, [[2, 1], [1]]).digest()


def test_empty_instance_degree():
    inst = InstanceSpec.build(3, [])
    assert inst.min_degree() == 0
