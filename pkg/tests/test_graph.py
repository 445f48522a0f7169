import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dynembed.graph import (ADD, DEL, EdgeDelta, NodeIndex, NoOpTriple, Snapshot, apply_delta,
                            compute_delta, neighbor_change_count)
from dynembed.synthetic import random_evolving

from oracles import adjacency

edge_lists = st.lists(st.tuples(st.integers(0, 14), st.integers(0, 14)), max_size=60)


def test_snapshot_drops_loops_and_duplicates():
    g = Snapshot.from_edges([(0, 1), (1, 0), (2, 2), (1, 2)])
    assert g.edge_count == 2
    assert g.nodes == (0, 1, 2)
    assert g.neighbors(1) == (0, 2)


def test_isolated_nodes_are_not_members():
    g = Snapshot.from_edges([(3, 3)])
    assert g.node_count == 0 and not g.has_node(3)


@given(edge_lists)
def test_snapshot_invariants(edges):
    g = Snapshot.from_edges(edges)
    for u, nb in g.adjacency.items():
        assert u not in nb
        assert list(nb) == sorted(set(nb))
        for v in nb:
            assert u in g.neighbors(v)
    assert sum(g.degree(v) for v in g) == 2 * g.edge_count
    assert g.node_count == len(adjacency(edges))


def test_delta_examples():
    a = Snapshot.from_edges([(0, 1)], 0)
    b = Snapshot.from_edges([(0, 1), (1, 2)], 1)
    assert compute_delta(a, b).triples == ((1, 2, ADD),)
    assert compute_delta(a, a).triples == ()
    empty = apply_delta(a, EdgeDelta(((0, 1, DEL),)))
    assert empty.edge_count == 0
    path = apply_delta(Snapshot.from_edges([]), EdgeDelta(((0, 1, ADD), (1, 2, ADD))))
    assert path.neighbors(1) == (0, 2)


@given(edge_lists, edge_lists)
def test_delta_round_trip_matches_set_difference(e1, e2):
    a, b = Snapshot.from_edges(e1, 0), Snapshot.from_edges(e2, 1)
    d = compute_delta(a, b)
    assert apply_delta(a, d) == b
    norm = lambda es: {(min(u, v), max(u, v)) for u, v in es if u != v}  # noqa: E731
    assert set(d.added) == norm(e2) - norm(e1)
    assert set(d.removed) == norm(e1) - norm(e2)
    keys = [(u, v) for u, v, _ in d.triples]
    assert len(keys) == len(set(keys))
    assert list(d.triples) == sorted(d.triples)


@given(edge_lists, edge_lists)
def test_change_counts_sum_to_twice_delta(e1, e2):
    a, b = Snapshot.from_edges(e1, 0), Snapshot.from_edges(e2, 1)
    d = compute_delta(a, b)
    nodes = set(a.nodes) | set(b.nodes)
    assert sum(neighbor_change_count(a, b, v) for v in nodes) == 2 * len(d)
    inc = d.incidence()
    for v in nodes:
        assert neighbor_change_count(a, b, v) == inc.get(v, 0)


def test_change_count_example():
    # N_prev = {1,2,3}, N_curr = {1,2,4,5}
    a = Snapshot.from_edges([(0, 1), (0, 2), (0, 3)])
    b = Snapshot.from_edges([(0, 1), (0, 2), (0, 4), (0, 5)])
    assert neighbor_change_count(a, b, 0) == 3
    assert neighbor_change_count(a, a, 0) == 0


@pytest.mark.parametrize("bad", [((0, 1, ADD),), ((5, 6, DEL),), ((1, 2, ADD), (2, 1, DEL))])
def test_noop_triples_rejected(bad):
    with pytest.raises(NoOpTriple):
        apply_delta(Snapshot.from_edges([(0, 1), (1, 2)]), EdgeDelta(bad))


def test_replayed_deltas_equal_direct_build():
    snaps = random_evolving(n_nodes=30, steps=50, rng=3)
    g = snaps[0]
    for s in snaps[1:]:
        g = apply_delta(g, compute_delta(g, s))
        assert g == s


def test_node_index_is_stable():
    idx = NodeIndex(["a", "b"])
    assert idx.intern("c") == 2 and idx.intern("a") == 0
    assert idx.label_of(1) == "b" and len(idx) == 3 and "c" in idx


@settings(max_examples=20)
@given(edge_lists)
def test_csr_matches_adjacency(edges):
    g = Snapshot.from_edges(edges)
    indptr, indices = g.csr(20)
    for v in range(20):
        assert tuple(indices[indptr[v]:indptr[v + 1]]) == g.neighbors(v)
    assert indices.dtype == np.int64
