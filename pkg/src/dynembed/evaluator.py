"""Graph reconstruction (AP@k) and link prediction (AUC) on learned embeddings."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import numpy as np

from .graph import Snapshot
from .selector import round_half_up
from .sgns import EmbeddingModel, MissingNode

SIMILARITIES = ("pair", "cosine", "dot")


class EmptyGroundTruth(ValueError):
    pass


class NoQueries(ValueError):
    pass


class InsufficientPairs(ValueError):
    pass


class DegenerateLabels(ValueError):
    pass


class Embedding:
    """Node vectors plus the similarity used to rank them.

    ``cosine`` and ``dot`` compare published (input) vectors. ``pair`` needs
    the context vectors too and scores u, v by the mean of z_u.z'_v and
    z_v.z'_u, i.e. the trained model's own co-occurrence logit.
    """

    def __init__(self, ids: Sequence[int], vectors: np.ndarray, context: np.ndarray | None = None,
                 similarity: str = "cosine"):
        if similarity not in SIMILARITIES:
            raise ValueError(f"unknown similarity {similarity!r}")
        if similarity == "pair" and context is None:
            raise ValueError("pair similarity needs context vectors (use a model checkpoint)")
        self.ids = np.asarray(ids, dtype=np.int64)
        order = np.argsort(self.ids, kind="stable")
        self.ids = self.ids[order]
        self.vectors = np.asarray(vectors, dtype=np.float64)[order]
        self.context = None if context is None else np.asarray(context, dtype=np.float64)[order]
        self.similarity = similarity
        norms = np.linalg.norm(self.vectors, axis=1)
        self._unit = np.divide(self.vectors, norms[:, None], out=np.zeros_like(self.vectors),
                               where=norms[:, None] > 0)

    @classmethod
    def from_model(cls, model: EmbeddingModel, similarity: str = "pair") -> "Embedding":
        vocab = model.vocab
        return cls(vocab, model.input_vectors[vocab], model.output_vectors[vocab], similarity)

    @classmethod
    def from_vectors(cls, vectors: Mapping[int, np.ndarray], similarity: str = "cosine") -> "Embedding":
        keys = sorted(vectors)
        mat = np.array([vectors[k] for k in keys], dtype=np.float64).reshape(len(keys), -1)
        return cls(keys, mat, None, similarity)

    def __contains__(self, v: int) -> bool:
        i = np.searchsorted(self.ids, v)
        return i < self.ids.size and self.ids[i] == v

    def rows(self, nodes: Iterable[int]) -> np.ndarray:
        nodes = np.asarray(list(nodes), dtype=np.int64)
        idx = np.searchsorted(self.ids, nodes)
        bad = (idx >= self.ids.size) | (self.ids[np.minimum(idx, self.ids.size - 1)] != nodes)
        if bad.any():
            raise MissingNode(f"not embedded: {nodes[bad][:5].tolist()}")
        return idx

    def score_block(self, queries: Sequence[int], candidates: Sequence[int]) -> np.ndarray:
        q = self.rows(queries)
        c = self.rows(candidates)
        if self.similarity == "cosine":
            return self._unit[q] @ self._unit[c].T
        if self.similarity == "dot":
            return self.vectors[q] @ self.vectors[c].T
        return 0.5 * (self.vectors[q] @ self.context[c].T + self.context[q] @ self.vectors[c].T)

    def pair_scores(self, pairs: Sequence[tuple[int, int]]) -> np.ndarray:
        if len(pairs) == 0:
            return np.zeros(0)
        arr = np.asarray(pairs, dtype=np.int64)
        u, v = self.rows(arr[:, 0]), self.rows(arr[:, 1])
        if self.similarity == "cosine":
            return np.einsum("ij,ij->i", self._unit[u], self._unit[v])
        if self.similarity == "dot":
            return np.einsum("ij,ij->i", self.vectors[u], self.vectors[v])
        return 0.5 * (np.einsum("ij,ij->i", self.vectors[u], self.context[v])
                      + np.einsum("ij,ij->i", self.context[u], self.vectors[v]))


def similarity(Z: Mapping[int, np.ndarray], u: int, v: int) -> float:
    """Cosine similarity of two embedded nodes; 0 if either vector is zero."""
    if u not in Z or v not in Z:
        raise MissingNode(f"not embedded: {[x for x in (u, v) if x not in Z]}")
    a = np.asarray(Z[u], dtype=np.float64)
    b = np.asarray(Z[v], dtype=np.float64)
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        return 0.0
    return float(np.clip(a @ b / (na * nb), -1.0, 1.0))


@dataclass
class RankedRetrieval:
    query: int
    ranked_candidates: list[int]
    ground_truth: frozenset[int]

    def __post_init__(self):
        if self.query in self.ranked_candidates:
            raise ValueError("query must not rank itself")


def ap_at_k(retrieval: RankedRetrieval, k: int) -> float:
    """Mean of precision@j over hit ranks j <= k, normalized by min(|truth|, k).

    Summed as an exact rational and rounded once.
    """
    truth = retrieval.ground_truth
    if not truth:
        raise EmptyGroundTruth(f"node {retrieval.query} has no neighbors")
    hits = 0
    total = Fraction(0)
    for j, v in enumerate(retrieval.ranked_candidates[:k], start=1):
        if v in truth:
            hits += 1
            total += Fraction(hits, j)
    return float(total / min(len(truth), k))


def _top_k(scores: np.ndarray, cand: np.ndarray, k: int) -> np.ndarray:
    """Candidates by descending score, ties to the smaller id; first k only."""
    if k < scores.size:
        kth = np.partition(scores, scores.size - k)[scores.size - k]
        keep = np.flatnonzero(scores >= kth)
        scores, cand = scores[keep], cand[keep]
    order = np.lexsort((cand, -scores))
    return cand[order[:k]]


@dataclass
class GRResult:
    value: float
    n_queries: int
    n_skipped: int
    per_query: dict[int, float] = field(default_factory=dict, repr=False)


def graph_reconstruction(emb: Embedding, snapshot: Snapshot, mode: str = "GR",
                         changed: Iterable[int] | None = None, sample_fraction: float = 0.25,
                         k: int = 10, rng: np.random.Generator | int | None = None) -> GRResult:
    """Mean AP@k of neighbor retrieval for sampled (GR) or changed (CGR) nodes.

    Candidates are all other embedded nodes of the snapshot; queries that are
    not embedded or have no embedded neighbor are skipped and counted.
    """
    nodes = np.array(snapshot.nodes, dtype=np.int64)
    if mode == "GR":
        rng = np.random.default_rng(rng)
        n_q = min(nodes.size, max(1, round_half_up(sample_fraction * nodes.size))) if nodes.size else 0
        queries = np.sort(rng.choice(nodes, size=n_q, replace=False)) if n_q else nodes[:0]
    elif mode == "CGR":
        if changed is None:
            raise ValueError("CGR needs the changed node set")
        queries = np.array(sorted(v for v in set(changed) if snapshot.has_node(v)), dtype=np.int64)
    else:
        raise ValueError(f"unknown mode {mode!r}")

    cand = np.array([v for v in nodes if v in emb], dtype=np.int64)
    valid = []
    skipped = 0
    for q in queries:
        truth = [u for u in snapshot.neighbors(int(q)) if u in emb]
        if q not in emb or not truth:
            skipped += 1
            continue
        valid.append((int(q), frozenset(truth)))
    if not valid:
        raise NoQueries(f"{mode}: no usable query among {len(queries)}")

    per_query = {}
    block = 256
    for s in range(0, len(valid), block):
        chunk = valid[s:s + block]
        S = emb.score_block([q for q, _ in chunk], cand)
        for row, (q, truth) in zip(S, chunk):
            mask = cand != q
            ranked = _top_k(row[mask], cand[mask], k)
            per_query[q] = ap_at_k(RankedRetrieval(q, ranked.tolist(), truth), k)
    value = float(np.mean(list(per_query.values())))
    return GRResult(value, len(per_query), skipped, per_query)


def changed_nodes(delta_endpoints: Iterable[int], snapshot: Snapshot) -> set[int]:
    return {v for v in delta_endpoints if snapshot.has_node(v)}


@dataclass
class LpTestSet:
    positives: list[tuple[int, int]]
    negatives: list[tuple[int, int]]
    skipped: int = 0

    def labeled(self) -> tuple[list[tuple[int, int]], np.ndarray]:
        pairs = self.positives + self.negatives
        labels = np.r_[np.ones(len(self.positives)), np.zeros(len(self.negatives))]
        return pairs, labels


def build_lp_testset(g_t: Snapshot, g_t1: Snapshot, embedded, rng: np.random.Generator | int | None = None,
                     min_pairs: int = 100, max_tries: int = 100) -> LpTestSet:
    """Balanced future-link test set for predicting G^{t+1} from embeddings at t.

    Added links are positives and removed links negatives. Both sides are
    topped up to ``max(|added|, |removed|, min_pairs)`` with sampled existing
    links at t+1 (positives) and sampled non-links at t+1 (negatives), then
    trimmed to a common size. Pairs touching a node not embedded at t are
    dropped and counted in ``skipped``.
    """
    rng = np.random.default_rng(rng)
    ok = embedded.__contains__

    def usable(e):
        return ok(e[0]) and ok(e[1])

    added_all = sorted(g_t1.edges - g_t.edges)
    removed_all = sorted(g_t.edges - g_t1.edges)
    added = [e for e in added_all if usable(e)]
    removed = [e for e in removed_all if usable(e)]
    skipped = len(added_all) - len(added) + len(removed_all) - len(removed)

    n = max(len(added), len(removed), min_pairs)

    positives = list(added)
    need = n - len(positives)
    if need > 0:
        taken = set(added)
        pool = [e for e in sorted(g_t1.edges) if e not in taken and usable(e)]
        if pool:
            pick = rng.choice(len(pool), size=min(need, len(pool)), replace=False)
            positives += [pool[i] for i in sorted(pick)]

    negatives = list(removed)
    need = n - len(negatives)
    if need > 0:
        nodes = np.array([v for v in g_t1.nodes if ok(v)], dtype=np.int64)
        chosen = set(removed)
        tries = 0
        budget = max_tries * need
        while need > 0 and nodes.size >= 2 and tries < budget:
            u, v = rng.choice(nodes, size=2, replace=False)
            e = (int(min(u, v)), int(max(u, v)))
            tries += 1
            if e in chosen or g_t1.has_edge(*e):
                continue
            chosen.add(e)
            negatives.append(e)
            need -= 1

    size = min(len(positives), len(negatives))
    # changed pairs come first in each list, so trimming drops sampled ones
    positives, negatives = positives[:size], negatives[:size]
    if size == 0:
        raise InsufficientPairs(f"only {len(positives)} positive / {len(negatives)} negative pairs usable")
    return LpTestSet(positives, negatives, skipped)


def auc(scores: Iterable[tuple[float, int]]) -> float:
    """P(random positive outscores random negative), ties count one half.

    Computed from integer pair counts, so the result is the correctly rounded
    value of the exact rational.
    """
    data = list(scores)
    pos = np.array([s for s, y in data if y], dtype=np.float64)
    neg = np.array([s for s, y in data if not y], dtype=np.float64)
    if pos.size == 0 or neg.size == 0:
        raise DegenerateLabels(f"{pos.size} positives, {neg.size} negatives")
    neg.sort()
    lo = np.searchsorted(neg, pos, side="left")
    hi = np.searchsorted(neg, pos, side="right")
    twice = int(2 * lo.sum() + (hi - lo).sum())
    return twice / (2 * pos.size * neg.size)


def link_prediction(emb: Embedding, testset: LpTestSet) -> float:
    pairs, labels = testset.labeled()
    s = emb.pair_scores(pairs)
    return auc(zip(s.tolist(), labels.astype(int).tolist()))


@dataclass
class MetricRecord:
    task: str
    t: int
    k: int | None
    value: float
    n_queries: int
    n_skipped: int
    wall_ms: float

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=False)
