from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from diffnet.cutsets import (enumerate_minimal_cutsets, min_vertex_cut, target_partition,
                             validate_cutset)
from diffnet.errors import NoCutExists, NotSevered, OverlapError, TooLarge
from diffnet.model import Network, from_edges

from conftest import make_random


def _reachable(a, sources, removed):
    # plain DFS on the adjacency matrix
    n = len(a)
    seen = set()
    stack = [s for s in sources]
    while stack:
        j = stack.pop()
        if j in seen:
            continue
        seen.add(j)
        for l in range(n):
            if a[l, j] > 0 and l not in removed and l not in seen:
                stack.append(l)
    return seen


def _brute_minimal(net, sources, target):
    others = [v for v in range(net.n) if v not in sources and v != target]
    severing = [frozenset(c) for r in range(1, len(others) + 1)
                for c in combinations(others, r)
                if target not in _reachable(net.a, sources, set(c))]
    return sorted((c for c in severing if not any(o < c for o in severing)), key=sorted)


def test_example_unique_minimal_cutset(example):
    assert enumerate_minimal_cutsets(example, {0}, 8) == [frozenset({3, 4, 5})]


def test_example_certificate(example):
    cert = validate_cutset(example, {0}, 8, {3, 4, 5})
    assert cert.severed
    assert cert.target_partition == {1, 2, 6, 7, 8}
    assert cert.to_json() == {"cutset": [4, 5, 6], "severed": True, "Z": [2, 3, 7, 8, 9]}


def test_partition_rows_depend_on_partition_and_cutset(example):
    cert = validate_cutset(example, {0}, 8, {3, 4, 5})
    z = sorted(cert.target_partition)
    outside = [v for v in range(9) if v not in cert.target_partition | cert.cutset]
    assert np.all(example.a[np.ix_(z, outside)] == 0)


def test_not_severed(example):
    cert = validate_cutset(example, {0}, 8, {3})
    assert not cert.severed and cert.target_partition == frozenset()
    with pytest.raises(NotSevered):
        target_partition(example, {3}, 8, {0})


@pytest.mark.parametrize("sources, target, cut", [
    ({0}, 0, {3}),
    ({0}, 8, set()),
    ({0}, 8, {0, 3}),
    ({0}, 8, {8, 3}),
])
def test_overlap(example, sources, target, cut):
    with pytest.raises(OverlapError):
        validate_cutset(example, sources, target, cut)


def test_adjacent_source_has_no_cut(example):
    assert enumerate_minimal_cutsets(example, {0}, 3) == []
    with pytest.raises(NoCutExists):
        min_vertex_cut(example, {0}, 3)


def test_min_cut_example(example):
    assert min_vertex_cut(example, {0}, 8) == {3, 4, 5}


def test_too_large():
    n = 25
    net = from_edges(n, [(i, i + 1, 0.5) for i in range(n - 1)])
    with pytest.raises(TooLarge):
        enumerate_minimal_cutsets(net, {0}, n - 1)
    assert len(enumerate_minimal_cutsets(net, {0}, n - 1, limit=3)) == 3


def test_chain_cutsets(chain3):
    assert enumerate_minimal_cutsets(chain3, {0}, 2) == [frozenset({1})]


def test_diamond_min_cut_two():
    net = from_edges(4, [(0, 1, 0.5), (0, 2, 0.5), (1, 3, 0.5), (2, 3, 0.5)])
    assert min_vertex_cut(net, {0}, 3) == {1, 2}
    assert enumerate_minimal_cutsets(net, {0}, 3) == [frozenset({1, 2})]


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.booleans())
def test_enumeration_matches_brute_force(seed, strong):
    net = make_random(seed, n_range=(4, 8), strong=strong)
    rng = np.random.default_rng(seed)
    s, t = (int(x) for x in rng.choice(net.n, 2, replace=False))
    got = enumerate_minimal_cutsets(net, {s}, t)
    trivial = net.a[t, s] > 0 or t not in _reachable(net.a, {s}, set())
    assert got == ([] if trivial else _brute_minimal(net, {s}, t))
    for c in got:
        assert validate_cutset(net, {s}, t, c).severed


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000))
def test_min_cut_is_smallest_minimal(seed):
    net = make_random(seed, n_range=(4, 8))
    rng = np.random.default_rng(seed + 1)
    s, t = (int(x) for x in rng.choice(net.n, 2, replace=False))
    if net.a[t, s] > 0:
        with pytest.raises(NoCutExists):
            min_vertex_cut(net, {s}, t)
        return
    cut = min_vertex_cut(net, {s}, t)
    assert validate_cutset(net, {s}, t, cut).severed
    assert len(cut) == min(len(c) for c in _brute_minimal(net, {s}, t))


def test_unreachable_target_has_no_minimal_cutsets():
    net = from_edges(3, [(0, 1, 0.5)])
    assert enumerate_minimal_cutsets(net, {0}, 2) == []


def test_multi_source_cutsets(example):
    cuts = enumerate_minimal_cutsets(example, {0, 1}, 8)
    assert cuts == [frozenset({3, 4, 5})]
    for c in cuts:
        assert 0 not in c and 1 not in c
