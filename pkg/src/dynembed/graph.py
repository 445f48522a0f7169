"""Immutable undirected snapshots, edge deltas and per-node change counts."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Hashable, Iterable, Iterator

import numpy as np

ADD = "add"
DEL = "del"


class NoOpTriple(ValueError):
    """A delta triple adds an existing edge or deletes an absent one."""


class NodeIndex:
    """Bidirectional map between external labels and dense internal ids.

    Ids are handed out in first-seen order and never recycled, so a node keeps
    its id (and therefore its embedding row) for the lifetime of a run.
    """

    def __init__(self, labels: Iterable[Hashable] = ()):
        self._ids: dict[Hashable, int] = {}
        self._labels: list[Hashable] = []
        for label in labels:
            self.intern(label)

    def intern(self, label: Hashable) -> int:
        idx = self._ids.get(label)
        if idx is None:
            idx = len(self._labels)
            self._ids[label] = idx
            self._labels.append(label)
        return idx

    def id_of(self, label: Hashable) -> int:
        return self._ids[label]

    def label_of(self, idx: int) -> Hashable:
        return self._labels[idx]

    def get(self, label: Hashable, default=None):
        return self._ids.get(label, default)

    def __contains__(self, label) -> bool:
        return label in self._ids

    def __len__(self) -> int:
        return len(self._labels)

    @property
    def labels(self) -> list[Hashable]:
        return list(self._labels)


def _norm(u: int, v: int) -> tuple[int, int]:
    return (u, v) if u < v else (v, u)


@dataclass(frozen=True, eq=False)
class Snapshot:
    """Simple undirected graph at one time step, keyed by internal node id.

    Only nodes with at least one edge are members. Build with
    :meth:`from_edges`; self-loops and duplicate edges are dropped there.
    """

    edges: frozenset[tuple[int, int]]
    time_index: int = 0
    _adj: dict[int, tuple[int, ...]] = field(repr=False, default_factory=dict)

    @classmethod
    def from_edges(cls, edges: Iterable[tuple[int, int]], time_index: int = 0) -> "Snapshot":
        normalized = {_norm(int(u), int(v)) for u, v in edges if u != v}
        return cls._build(frozenset(normalized), time_index)

    @classmethod
    def _build(cls, edges: frozenset[tuple[int, int]], time_index: int) -> "Snapshot":
        nbrs: dict[int, list[int]] = {}
        for u, v in edges:
            nbrs.setdefault(u, []).append(v)
            nbrs.setdefault(v, []).append(u)
        adj = {u: tuple(sorted(vs)) for u, vs in sorted(nbrs.items())}
        return cls(edges=edges, time_index=time_index, _adj=adj)

    @property
    def adjacency(self) -> dict[int, tuple[int, ...]]:
        return dict(self._adj)

    @property
    def nodes(self) -> tuple[int, ...]:
        return tuple(self._adj)

    @property
    def node_count(self) -> int:
        return len(self._adj)

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    def neighbors(self, v: int) -> tuple[int, ...]:
        return self._adj.get(v, ())

    def degree(self, v: int) -> int:
        return len(self._adj.get(v, ()))

    def has_node(self, v: int) -> bool:
        return v in self._adj

    def has_edge(self, u: int, v: int) -> bool:
        return _norm(u, v) in self.edges

    def __contains__(self, v: int) -> bool:
        return v in self._adj

    def __iter__(self) -> Iterator[int]:
        return iter(self._adj)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Snapshot):
            return NotImplemented
        return self.edges == other.edges

    def __hash__(self) -> int:
        return hash(self.edges)

    def csr(self, n_ids: int | None = None) -> tuple[np.ndarray, np.ndarray]:
        """CSR arrays ``(indptr, indices)`` over ids ``0..n_ids-1``."""
        cache = self.__dict__.get("_csr_cache")
        top = max(self._adj, default=-1) + 1
        n = top if n_ids is None else max(n_ids, top)
        if cache is not None and cache[0].shape[0] == n + 1:
            return cache
        deg = np.zeros(n, dtype=np.int64)
        for u, vs in self._adj.items():
            deg[u] = len(vs)
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(deg, out=indptr[1:])
        indices = np.empty(indptr[-1], dtype=np.int64)
        for u, vs in self._adj.items():
            indices[indptr[u]:indptr[u + 1]] = vs
        object.__setattr__(self, "_csr_cache", (indptr, indices))
        return indptr, indices


@dataclass(frozen=True)
class EdgeDelta:
    """Ordered add/del triples turning snapshot ``time_index - 1`` into ``time_index``."""

    triples: tuple[tuple[int, int, str], ...]
    time_index: int = 1

    def __len__(self) -> int:
        return len(self.triples)

    def __iter__(self):
        return iter(self.triples)

    def endpoints(self) -> set[int]:
        out: set[int] = set()
        for u, v, _ in self.triples:
            out.add(u)
            out.add(v)
        return out

    def incidence(self) -> dict[int, int]:
        """Number of triples touching each node."""
        counts: dict[int, int] = {}
        for u, v, _ in self.triples:
            counts[u] = counts.get(u, 0) + 1
            counts[v] = counts.get(v, 0) + 1
        return counts

    @property
    def added(self) -> list[tuple[int, int]]:
        return [(u, v) for u, v, op in self.triples if op == ADD]

    @property
    def removed(self) -> list[tuple[int, int]]:
        return [(u, v) for u, v, op in self.triples if op == DEL]


def compute_delta(prev: Snapshot, curr: Snapshot) -> EdgeDelta:
    """Minimal triple set transforming ``prev`` into ``curr``.

    Triples are sorted by ``(min, max, op)`` so output is deterministic.
    """
    triples = [(u, v, ADD) for u, v in curr.edges - prev.edges]
    triples += [(u, v, DEL) for u, v in prev.edges - curr.edges]
    triples.sort()
    return EdgeDelta(tuple(triples), time_index=curr.time_index)


def apply_delta(prev: Snapshot, delta: EdgeDelta) -> Snapshot:
    edges = set(prev.edges)
    seen: set[tuple[int, int]] = set()
    for u, v, op in delta.triples:
        e = _norm(u, v)
        if e in seen:
            raise NoOpTriple(f"pair {e} appears twice in one delta")
        seen.add(e)
        if op == ADD:
            if e in edges or u == v:
                raise NoOpTriple(f"add of existing edge {e}")
            edges.add(e)
        elif op == DEL:
            if e not in edges:
                raise NoOpTriple(f"del of absent edge {e}")
            edges.remove(e)
        else:
            raise ValueError(f"unknown op {op!r}")
    return Snapshot._build(frozenset(edges), delta.time_index)


def neighbor_change_count(prev: Snapshot, curr: Snapshot, v: int) -> int:
    """Size of the symmetric difference between v's neighbor sets at t-1 and t."""
    return len(set(prev.neighbors(v)).symmetric_difference(curr.neighbors(v)))
