import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dynembed.graph import ADD, EdgeDelta, Snapshot, compute_delta
from dynembed.selector import (Reservoir, SelectorConfig, budget_split, round_half_up, score,
                               select_nodes, top_k_affected, update_reservoir)
from dynembed.synthetic import grid_toy, random_evolving

from oracles import SelectorReplay, budget, ranked_top


def test_round_half_up():
    assert [round_half_up(x) for x in (0.5, 1.5, 2.5, 2.4999)] == [1, 2, 3, 2]
    assert budget_split(25, 0.2, 0.5) == (5, 3)
    assert budget_split(25, 0.2, 0.3) == (5, 2)
    assert budget_split(25, 0.2, 0.3, swap_beta=True) == (5, 4)


@given(st.integers(0, 500), st.floats(0, 1), st.floats(0, 1))
def test_budget_matches_decimal_oracle(n, a, b):
    a, b = round(a, 3), round(b, 3)
    assert budget_split(n, a, b) == budget(n, a, b)


def test_update_reservoir_examples():
    d = EdgeDelta(((0, 1, ADD),))
    assert update_reservoir({}, d) == {0: 1, 1: 1}
    assert update_reservoir({7: 2}, EdgeDelta(())) == {7: 2}


def test_update_reservoir_matches_incidence_tally():
    rng = np.random.default_rng(0)
    pairs = set()
    while len(pairs) < 30:
        u, v = sorted(rng.choice(10, 2, replace=False).tolist())
        pairs.add((u, v))
    d = EdgeDelta(tuple((u, v, ADD) for u, v in sorted(pairs)))
    tally = {}
    for u, v in pairs:
        tally[u] = tally.get(u, 0) + 1
        tally[v] = tally.get(v, 0) + 1
    assert update_reservoir({}, d) == tally


def test_score_example():
    prev = Snapshot.from_edges([(0, 1), (0, 2), (0, 3), (0, 4)])
    curr = Snapshot.from_edges([(0, 1), (0, 2), (0, 3), (0, 5), (4, 5)])
    # node 0 lost 4 and gained 5
    assert score(0, {0: 1}, prev, curr) == pytest.approx(0.75)
    assert score(1, {}, prev, curr) == 0.0


def test_score_monotone_and_degree_scaling():
    prev = Snapshot.from_edges([(0, 1), (0, 2), (3, 4), (3, 5), (6, 7), (6, 8), (6, 9), (6, 10)])
    assert score(0, {0: 3}, prev, prev) > score(3, {3: 2}, prev, prev)
    assert score(6, {6: 4}, prev, prev) == score(0, {0: 4}, prev, prev) / 2


def test_top_k_examples():
    assert top_k_affected({0: 3.0, 1: 1.0, 2: 2.0}, 2) == {0, 2}
    assert top_k_affected({0: 3.0}, 0) == set()
    assert top_k_affected({4: 1.0, 2: 1.0, 9: 1.0}, 2) == {2, 4}
    assert top_k_affected({1: 1.0}, 5) == {1}


@pytest.mark.parametrize("seed", range(5))
def test_top_k_matches_full_sort(seed):
    rng = np.random.default_rng(seed)
    ids = rng.permutation(5000)[:1000]
    # coarse values force plenty of ties at the boundary
    scores = {int(v): float(rng.integers(0, 40)) / 4 for v in ids}
    assert top_k_affected(scores, 137) == ranked_top(scores, 137)


def _nodes(n):
    return Snapshot.from_edges([(i, (i + 1) % n) for i in range(n)])


def test_budget_examples_with_full_and_short_reservoir():
    g = _nodes(100)
    cfg = SelectorConfig(0.2, 0.5)
    res = Reservoir({v: 1 + v % 3 for v in range(40)})
    sel, _ = select_nodes(g, g, compute_delta(g, g), res, cfg, np.random.default_rng(0))
    assert (len(sel.affected), len(sel.diverse)) == (10, 10)
    res = Reservoir({v: 1 for v in range(4)})
    sel, after = select_nodes(g, g, compute_delta(g, g), res, cfg, np.random.default_rng(0))
    assert (len(sel.affected), len(sel.diverse), sel.deficit) == (4, 16, 6)
    assert not after


def test_identical_snapshots_full_deficit_shift():
    g = _nodes(50)
    sel, _ = select_nodes(g, g, compute_delta(g, g), Reservoir(), SelectorConfig(0.2, 1.0),
                          np.random.default_rng(1))
    assert not sel.affected and len(sel.diverse) == 10


def test_grid_beta_extremes():
    sc = grid_toy()
    prev, curr = sc.snapshots
    d = compute_delta(prev, curr)
    sel, _ = select_nodes(prev, curr, d, Reservoir(), SelectorConfig(0.1, 1.0), np.random.default_rng(0))
    assert sel.affected == sc.changed_seen and sel.unseen == sc.unseen
    assert len(sel.affected) < sel.target_affected
    sel, _ = select_nodes(prev, curr, d, Reservoir(), SelectorConfig(0.1, 0.0), np.random.default_rng(0))
    assert sel.affected == frozenset() and sel.unseen == sc.unseen


@pytest.mark.parametrize("seed", range(20))
@pytest.mark.parametrize("beta", [0.0, 0.5, 1.0])
def test_selection_replay_oracle(seed, beta):
    snaps = random_evolving(n_nodes=25, steps=6, p=0.15, churn=0.5, rng=seed)
    alpha = 0.3
    replay = SelectorReplay(alpha, beta)
    res = Reservoir()
    rng = np.random.default_rng(seed)
    for prev, curr in zip(snaps, snaps[1:]):
        exp = replay.step(prev.edges, curr.edges)
        d = compute_delta(prev, curr)
        for v, s in exp["scores"].items():
            assert score(v, res, prev, curr) == pytest.approx(s, rel=0, abs=1e-15)
        sel, res = select_nodes(prev, curr, d, res, SelectorConfig(alpha, beta), rng)
        assert sel.unseen == exp["unseen"]
        assert sel.affected == exp["affected"]
        assert (sel.budget, sel.target_affected) == (exp["budget"], exp["target"])
        assert sel.diverse <= exp["pool"] and len(sel.diverse) == exp["n_diverse"]
        assert dict(res) == replay.commit(exp, sel.diverse)
        assert not (sel.unseen & sel.affected or sel.unseen & sel.diverse or sel.affected & sel.diverse)
        assert all(c >= 1 for c in res.values())
        if curr.node_count - len(sel.unseen) >= sel.budget:
            assert len(sel.affected) + len(sel.diverse) == sel.budget


def test_unselected_reservoir_counts_never_decrease():
    snaps = random_evolving(n_nodes=40, steps=10, p=0.2, churn=0.3, rng=11)
    res = Reservoir()
    rng = np.random.default_rng(0)
    for prev, curr in zip(snaps, snaps[1:]):
        old = dict(res)
        sel, res = select_nodes(prev, curr, compute_delta(prev, curr), res, SelectorConfig(0.1, 0.5), rng)
        for v, c in old.items():
            if v in res:
                assert res[v] >= c
            else:
                assert v in sel.all or not curr.has_node(v)


def test_beta_zero_sampling_is_uniform():
    n, trials = 20, 10_000
    g = _nodes(n)
    res = Reservoir({v: 1 for v in range(n)})
    rng = np.random.default_rng(5)
    hits = np.zeros(n)
    cfg = SelectorConfig(0.25, 0.0)
    for _ in range(trials):
        sel, _ = select_nodes(g, g, compute_delta(g, g), res, cfg, rng)
        hits[list(sel.diverse)] += 1
    p = 5 / n
    sigma = np.sqrt(trials * p * (1 - p))
    assert np.all(np.abs(hits - trials * p) < 3 * sigma)


def test_config_validation():
    with pytest.raises(ValueError):
        SelectorConfig(alpha=1.5)
    with pytest.raises(ValueError):
        SelectorConfig(beta=-0.1)
