"""Synthetic graphs and evolving networks for tests, demos and benchmarks."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import Snapshot


def sbm_edges(sizes, p_in: float, p_out: float, rng) -> tuple[list[tuple[int, int]], np.ndarray]:
    """Undirected stochastic block model; returns edges and each node's block."""
    rng = np.random.default_rng(rng)
    block = np.repeat(np.arange(len(sizes)), sizes)
    n = block.size
    iu, ju = np.triu_indices(n, k=1)
    p = np.where(block[iu] == block[ju], p_in, p_out)
    keep = rng.random(iu.size) < p
    return list(zip(iu[keep].tolist(), ju[keep].tolist())), block


def sbm_snapshot(sizes=(50, 50), p_in=0.3, p_out=0.02, rng=None) -> tuple[Snapshot, np.ndarray]:
    edges, block = sbm_edges(sizes, p_in, p_out, rng)
    return Snapshot.from_edges(edges, 0), block


@dataclass
class EvolvingGraph:
    snapshots: list[Snapshot]
    block: np.ndarray

    def __len__(self):
        return len(self.snapshots)


def growing_sbm(steps=10, sizes=(50, 50), p_in=0.3, p_out=0.02, new_nodes=5, new_edges=20,
                rng=None) -> EvolvingGraph:
    """SBM that gains ``new_nodes`` nodes and ``new_edges`` intra-block edges per step.

    Every new node joins a block (round robin) with two edges to existing
    members of that block; the rest of the step's edge quota goes to random
    intra-block non-edges among older nodes. Only additions, so snapshots grow.
    """
    rng = np.random.default_rng(rng)
    edges, block = sbm_edges(sizes, p_in, p_out, rng)
    edge_set = set(edges)
    block = list(block.tolist())
    snaps = [Snapshot.from_edges(edge_set, 0)]
    n_blocks = len(sizes)
    for t in range(1, steps + 1):
        added = 0
        old_n = len(block)
        members = [[v for v in range(old_n) if block[v] == b] for b in range(n_blocks)]
        for i in range(new_nodes):
            b = (old_n + i) % n_blocks
            v = len(block)
            block.append(b)
            for u in rng.choice(members[b], size=2, replace=False):
                edge_set.add((int(u), v))
                added += 1
        while added < new_edges:
            b = int(rng.integers(n_blocks))
            u, v = sorted(int(x) for x in rng.choice(members[b], size=2, replace=False))
            if (u, v) not in edge_set:
                edge_set.add((u, v))
                added += 1
        snaps.append(Snapshot.from_edges(edge_set, t))
    return EvolvingGraph(snaps, np.array(block))


def grid_edges(rows=20, cols=8) -> list[tuple[int, int]]:
    """2-d lattice, node id = r * cols + c."""
    out = []
    for r in range(rows):
        for c in range(cols):
            v = r * cols + c
            if c + 1 < cols:
                out.append((v, v + 1))
            if r + 1 < rows:
                out.append((v, v + cols))
    return out


@dataclass
class GridScenario:
    snapshots: list[Snapshot]
    unseen: set[int]
    changed_seen: set[int]


def grid_toy(rows=20, cols=8, n_unseen=3, rng=None) -> GridScenario:
    """A 20x8 lattice that gets new nodes at one corner and a few new links mid-way.

    The new nodes hang off node 0; the new links are shortcuts inside a small
    patch around row ``rows * 2 // 3``, far from the corner.
    """
    base = grid_edges(rows, cols)
    n = rows * cols
    new_edges = []
    unseen = set(range(n, n + n_unseen))
    prev = 0
    for v in sorted(unseen):
        new_edges.append((prev, v))
        prev = v
    r0 = rows * 2 // 3
    c0 = cols - 3
    patch = [(r0 * cols + c0, (r0 + 1) * cols + c0 + 1),
             (r0 * cols + c0 + 1, (r0 + 2) * cols + c0 + 2),
             ((r0 + 1) * cols + c0, (r0 + 2) * cols + c0 + 1)]
    new_edges += patch
    g0 = Snapshot.from_edges(base, 0)
    g1 = Snapshot.from_edges(base + new_edges, 1)
    changed_seen = set()
    for u, v in new_edges:
        for x in (u, v):
            if x < n:
                changed_seen.add(x)
    return GridScenario([g0, g1], unseen, changed_seen)


def random_evolving(n_nodes=30, steps=6, p=0.15, churn=0.2, rng=None) -> list[Snapshot]:
    """Erdos-Renyi start, then each step both adds and removes edges and nodes."""
    rng = np.random.default_rng(rng)
    iu, ju = np.triu_indices(n_nodes, k=1)
    alive = rng.random(iu.size) < p
    snaps = [Snapshot.from_edges(zip(iu[alive].tolist(), ju[alive].tolist()), 0)]
    for t in range(1, steps):
        flip = rng.random(iu.size) < churn * p
        alive = alive ^ flip
        snaps.append(Snapshot.from_edges(zip(iu[alive].tolist(), ju[alive].tolist()), t))
    return snaps


def bench_stream(n_nodes=5000, avg_degree=10, steps=3, new_nodes=10, new_edges_frac=0.01,
                 n_blocks=20, rng=None) -> list[Snapshot]:
    """Block-structured graph of ``n_nodes`` nodes with small additive steps.

    Sparse sampling keeps generation linear in the number of edges.
    """
    rng = np.random.default_rng(rng)
    block = rng.integers(n_blocks, size=n_nodes)
    members = [np.flatnonzero(block == b) for b in range(n_blocks)]
    m = n_nodes * avg_degree // 2
    edges: set[tuple[int, int]] = set()

    def draw(count, n):
        # 80% of edges stay inside the first endpoint's block
        made = 0
        while made < count:
            u = int(rng.integers(n))
            if rng.random() < 0.8:
                v = int(rng.choice(members[block[u]]))
            else:
                v = int(rng.integers(n))
            e = (min(u, v), max(u, v))
            if u == v or e in edges:
                continue
            edges.add(e)
            made += 1

    draw(m, n_nodes)
    snaps = [Snapshot.from_edges(edges, 0)]
    n = n_nodes
    for t in range(1, steps + 1):
        for _ in range(new_nodes):
            b = int(rng.integers(n_blocks))
            block = np.append(block, b)
            for u in rng.choice(members[b], size=3, replace=False):
                edges.add((int(u), n))
            members[b] = np.append(members[b], n)
            n += 1
        draw(int(new_edges_frac * len(edges)), n)
        snaps.append(Snapshot.from_edges(edges, t))
    return snaps
