"""Truncated uniform random walks and sliding-window training pairs."""

from __future__ import annotations

import os
from collections import Counter
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from . import _kernels
from .graph import Snapshot


@dataclass(frozen=True)
class WalkConfig:
    walks_per_node: int = 20
    walk_length: int = 80
    window: int = 10
    seed: int = 0

    def __post_init__(self):
        for name in ("walks_per_node", "walk_length", "window"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")


def _seed_from(rng) -> int:
    if isinstance(rng, np.random.Generator):
        return int(rng.integers(0, 2**63))
    return int(rng)


def random_walk(snapshot: Snapshot, start: int, length: int, rng) -> list[int]:
    """One walk of up to ``length`` nodes; stops early at a node with no neighbors."""
    indptr, indices = snapshot.csr(start + 1)
    flat, _ = _kernels.random_walks(
        indptr, indices, np.array([start], dtype=np.int64), 1, length, np.uint64(_seed_from(rng))
    )
    return flat.tolist()


class PairCorpus:
    """Training pairs implied by a set of walks and a window size.

    The walks are the stored representation; the (center, context) multiset
    is materialized only on request via :meth:`pair_counts`.
    """

    def __init__(self, flat: np.ndarray, offsets: np.ndarray, window: int, n_ids: int):
        self.flat = np.ascontiguousarray(flat, dtype=np.int32)
        self.offsets = np.ascontiguousarray(offsets, dtype=np.int64)
        self.window = int(window)
        self.n_ids = int(n_ids)
        self._freq = None

    @classmethod
    def from_walks(cls, walks: Iterable[Iterable[int]], window: int, n_ids: int | None = None) -> "PairCorpus":
        walks = [list(w) for w in walks]
        lens = np.array([len(w) for w in walks], dtype=np.int64)
        offsets = np.zeros(len(walks) + 1, dtype=np.int64)
        np.cumsum(lens, out=offsets[1:])
        flat = np.array([v for w in walks for v in w], dtype=np.int32)
        if n_ids is None:
            n_ids = int(flat.max()) + 1 if flat.size else 0
        return cls(flat, offsets, window, n_ids)

    @property
    def n_walks(self) -> int:
        return self.offsets.shape[0] - 1

    def walks(self) -> list[list[int]]:
        return [self.flat[a:b].tolist() for a, b in zip(self.offsets[:-1], self.offsets[1:])]

    @property
    def total_pairs(self) -> int:
        return int(_kernels.count_pairs(self.offsets, self.window))

    def __len__(self) -> int:
        return self.total_pairs

    @property
    def node_frequency(self) -> np.ndarray:
        """Per-node occurrence count over all pairs, as center or as context."""
        if self._freq is None:
            self._freq = _kernels.node_frequency(self.flat, self.offsets, self.window, self.n_ids)
        return self._freq

    def nodes(self) -> np.ndarray:
        return np.flatnonzero(self.node_frequency)

    def pair_counts(self) -> Counter:
        """The explicit multiset ``{(center, context): count}``."""
        centers, contexts = _kernels.enumerate_pairs(self.flat, self.offsets, self.window)
        if centers.size == 0:
            return Counter()
        keys = centers * self.n_ids + contexts
        uniq, counts = np.unique(keys, return_counts=True)
        return Counter({(int(k // self.n_ids), int(k % self.n_ids)): int(c) for k, c in zip(uniq, counts)})

    def dump_walks(self, path: str | os.PathLike, labels=None) -> None:
        """Debug dump: one walk per line, space-separated labels."""
        name = labels if labels is not None else (lambda i: i)
        with open(path, "w", encoding="utf-8") as fh:
            for walk in self.walks():
                fh.write(" ".join(str(name(v)) for v in walk) + "\n")


def generate_corpus(snapshot: Snapshot, selected: Iterable[int], cfg: WalkConfig, rng=None,
                    n_ids: int | None = None) -> PairCorpus:
    """``walks_per_node`` walks from each selected node, in ascending id order.

    Walk j from node v is seeded from (seed, v, j) alone, so the result does not
    depend on how walks are scheduled.
    """
    starts = np.array(sorted(set(int(v) for v in selected)), dtype=np.int64)
    top = max(snapshot.nodes, default=-1) + 1
    if starts.size:
        top = max(top, int(starts[-1]) + 1)
    n = top if n_ids is None else max(n_ids, top)
    base = cfg.seed if rng is None else _seed_from(rng)
    indptr, indices = snapshot.csr(n)
    flat, offsets = _kernels.random_walks(
        indptr, indices, starts, cfg.walks_per_node, cfg.walk_length, np.uint64(base)
    )
    return PairCorpus(flat, offsets, cfg.window, n)
