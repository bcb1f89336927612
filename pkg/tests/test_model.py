import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from diffnet.errors import InvalidMatrix, NotStochastic, ParseError
from diffnet.model import (EXAMPLE_MATRIX, Network, StochasticityKind, bfs_distances, classify,
                           decay_rate, distance_classes, edgelist_csv, from_edges, is_ergodic,
                           load_network, load_network_file, matrix_csv, period, relabel,
                           spectral_radius, strongly_connected)

from conftest import make_random


def test_example_structure(example):
    assert example.n == 9
    assert len(example.edges()) == 27
    assert classify(example).kind is StochasticityKind.SUBSTOCHASTIC
    assert strongly_connected(example)


def test_example_distance_classes(example):
    classes = distance_classes(example, 0)
    assert classes == {0: {0}, 1: {3, 4, 5}, 2: {6, 7, 8}, 3: {1, 2}}


def test_example_spectral_radius_matches_eigvals(example):
    oracle = max(abs(np.linalg.eigvals(np.array(EXAMPLE_MATRIX))))
    assert spectral_radius(example) == pytest.approx(oracle, rel=1e-12)
    assert 0 < spectral_radius(example) < 1


@pytest.mark.parametrize("bad, row", [
    ([[0.6, 0.5], [0, 0]], 0),
    ([[0, 0], [0.3, -0.1]], 1),
    ([[0, 0], [float("nan"), 0]], 1),
])
def test_from_matrix_rejects(bad, row):
    with pytest.raises(InvalidMatrix) as info:
        Network.from_matrix(bad)
    assert info.value.row == row


def test_non_square_rejected():
    with pytest.raises(InvalidMatrix):
        Network.from_matrix([[0, 0.5, 0]])


def test_row_sum_tolerance():
    Network.from_matrix([[0.5, 0.5 + 5e-13], [0, 0]])
    with pytest.raises(InvalidMatrix):
        Network.from_matrix([[0.5, 0.5 + 1e-11], [0, 0]])


def test_classify_stochastic():
    net = Network.from_matrix([[0.5, 0.5], [1.0, 0.0]])
    assert classify(net).kind is StochasticityKind.STOCHASTIC
    assert is_ergodic(net)
    assert spectral_radius(net) == pytest.approx(1.0, abs=1e-12)


def test_periodic_stochastic_not_ergodic():
    net = Network.from_matrix([[0, 1.0], [1.0, 0]])
    assert period(net) == 2
    assert not is_ergodic(net)


def test_ergodic_requires_stochastic(example):
    with pytest.raises(NotStochastic):
        is_ergodic(example)


def test_example_period_is_three(example):
    # layered 1 -> {4,5,6} -> {7,8,9} -> {1,2,3}
    assert period(example) == 3


def test_from_edges_duplicate():
    with pytest.raises(ParseError):
        from_edges(3, [(0, 1, 0.5), (0, 1, 0.2)])


def test_edge_direction():
    net = from_edges(2, [(0, 1, 0.5)])
    assert net.a[1, 0] == 0.5
    assert net.successors[0] == (1,) or list(net.successors[0]) == [1]


def test_matrix_roundtrip(example):
    again = load_network(matrix_csv(example))
    assert again == example


def test_edgelist_roundtrip(example):
    again = load_network(edgelist_csv(example), fmt="edgelist")
    np.testing.assert_array_equal(again.a, example.a)


def test_json_roundtrip(example):
    doc = json.dumps(example.to_json())
    assert load_network(doc) == example


def test_file_loading(tmp_path, example):
    p = tmp_path / "net.csv"
    p.write_text(matrix_csv(example))
    assert load_network_file(p) == example


@pytest.mark.parametrize("text", ["", "0,0.5\n0.1", "a,b\nc,d", "1,2\n3"])
def test_parse_errors(text):
    with pytest.raises(ParseError):
        load_network(text)


def test_hash_and_digest_stable(example):
    other = Network.from_matrix(EXAMPLE_MATRIX)
    assert hash(other) == hash(example) and other.digest == example.digest


def test_relabel_preserves_spectrum(example):
    perm = [3, 1, 4, 0, 5, 8, 2, 6, 7]
    moved = relabel(example, perm)
    assert spectral_radius(moved) == pytest.approx(spectral_radius(example), rel=1e-12)
    d0 = bfs_distances(example, 0)
    d1 = bfs_distances(moved, perm[0])
    assert sorted(d0) == sorted(d1)


def _bfs_oracle(a, s):
    # distances via boolean matrix powers
    n = len(a)
    adj = (np.asarray(a) > 0).T.astype(int)  # adj[j, l] = edge j -> l
    dist = [-1] * n
    frontier = np.zeros(n, dtype=int)
    frontier[s] = 1
    seen = frontier.copy()
    dist[s] = 0
    for d in range(1, n):
        frontier = ((frontier @ adj) > 0).astype(int) & (1 - seen)
        for v in np.flatnonzero(frontier):
            dist[v] = d
        seen |= frontier
    return dist


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000))
def test_bfs_and_rho_match_oracles(seed):
    net = make_random(seed, strong=False)
    for s in range(net.n):
        assert bfs_distances(net, s) == _bfs_oracle(net.a, s)
    oracle = max(abs(np.linalg.eigvals(net.a)))
    assert spectral_radius(net) == pytest.approx(oracle, rel=1e-9, abs=1e-12)


def test_decay_rate_stochastic():
    net = Network.from_matrix([[0.5, 0.5], [0.25, 0.75]])
    assert decay_rate(net) == pytest.approx(0.25)


def test_rho_on_reducible():
    a = np.array([[0.5, 0, 0], [0.2, 0.1, 0], [0, 0.3, 0.7]])
    assert spectral_radius(Network.from_matrix(a)) == pytest.approx(0.7, rel=1e-12)
    assert not math.isnan(decay_rate(Network.from_matrix(a)))
