"""Skip-Gram with Negative Sampling over node ids, with warm start and vocabulary growth."""

from __future__ import annotations

import hashlib
import io
import os
import struct
from dataclasses import dataclass, field
from typing import Hashable, Iterable, Mapping

import numpy as np

from . import _kernels
from .walker import PairCorpus


class DuplicateNode(ValueError):
    pass


class EmptyCorpus(ValueError):
    pass


class MissingNode(KeyError):
    pass


_MAGIC = b"SGNSCKPT1"


@dataclass
class EmbeddingModel:
    """Input (published) and output (context) vectors, rows indexed by node id.

    Rows exist for ids ``0..capacity-1``; only ids in ``vocab`` are meaningful.
    """

    dim: int = 128
    negatives: int = 5
    input_vectors: np.ndarray = field(default=None, repr=False)
    output_vectors: np.ndarray = field(default=None, repr=False)
    present: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        if self.input_vectors is None:
            self.input_vectors = np.zeros((0, self.dim), dtype=np.float32)
            self.output_vectors = np.zeros((0, self.dim), dtype=np.float32)
            self.present = np.zeros(0, dtype=bool)

    @property
    def vocab(self) -> np.ndarray:
        return np.flatnonzero(self.present)

    def __contains__(self, v: int) -> bool:
        return 0 <= v < self.present.shape[0] and bool(self.present[v])

    def __len__(self) -> int:
        return int(self.present.sum())

    def _grow(self, n: int) -> None:
        cap = self.present.shape[0]
        if n <= cap:
            return
        extra = n - cap
        self.input_vectors = np.vstack([self.input_vectors, np.zeros((extra, self.dim), np.float32)])
        self.output_vectors = np.vstack([self.output_vectors, np.zeros((extra, self.dim), np.float32)])
        self.present = np.concatenate([self.present, np.zeros(extra, bool)])

    def copy(self) -> "EmbeddingModel":
        return EmbeddingModel(self.dim, self.negatives, self.input_vectors.copy(),
                              self.output_vectors.copy(), self.present.copy())

    def digest(self) -> str:
        h = hashlib.sha256()
        for a in (self.present, self.input_vectors, self.output_vectors):
            h.update(np.ascontiguousarray(a).tobytes())
        return h.hexdigest()


def _fill_new(model: EmbeddingModel, nodes: np.ndarray, rng: np.random.Generator) -> None:
    half = 0.5 / model.dim
    for v in nodes:
        model.input_vectors[v] = rng.uniform(-half, half, model.dim).astype(np.float32)
        model.output_vectors[v] = 0.0
        model.present[v] = True


def init_model(nodes: Iterable[int], dim: int = 128, negatives: int = 5,
               rng: np.random.Generator | int | None = None) -> EmbeddingModel:
    """Input entries ~ U(-0.5/d, 0.5/d), output vectors zero, rows drawn in id order."""
    rng = np.random.default_rng(rng)
    model = EmbeddingModel(dim, negatives)
    return extend_vocab(model, nodes, rng)


def extend_vocab(model: EmbeddingModel, new_nodes: Iterable[int],
                 rng: np.random.Generator | int | None = None) -> EmbeddingModel:
    rng = np.random.default_rng(rng)
    new = np.array(sorted(set(int(v) for v in new_nodes)), dtype=np.int64)
    if new.size == 0:
        return model
    dup = [int(v) for v in new if v in model]
    if dup:
        raise DuplicateNode(f"already in vocabulary: {dup[:5]}")
    model._grow(int(new[-1]) + 1)
    _fill_new(model, new, rng)
    return model


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


def pair_objective(z_center, z_context, z_negs) -> float:
    """log s(c.x) + sum_k log s(-c.k), in float64."""
    zc = np.asarray(z_center, dtype=np.float64)
    zn = np.asarray(z_negs, dtype=np.float64).reshape(-1, zc.shape[0])
    val = -np.logaddexp(0.0, -zc @ np.asarray(z_context, dtype=np.float64))
    return float(val - np.logaddexp(0.0, zn @ zc).sum())


def pair_gradients(z_center, z_context, z_negs):
    """Analytic gradient of :func:`pair_objective`.

    Returns ``(d_center, d_context, d_negs)`` where ``d_negs`` has one row per
    negative (duplicates get identical rows; their contributions sum).
    """
    zc = np.asarray(z_center, dtype=np.float64)
    zx = np.asarray(z_context, dtype=np.float64)
    zn = np.asarray(z_negs, dtype=np.float64).reshape(-1, zc.shape[0])
    g_pos = 1.0 - _sigmoid(zc @ zx)
    g_neg = -_sigmoid(zn @ zc)
    d_center = g_pos * zx + g_neg @ zn
    d_context = g_pos * zc
    d_negs = g_neg[:, None] * zc[None, :]
    return d_center, d_context, d_negs


def sgd_pair(model: EmbeddingModel, center: int, context: int, negatives: Iterable[int], lr: float) -> None:
    """One in-place ascent step on a single (center, context) pair."""
    negs = np.asarray(list(negatives), dtype=np.int64)
    neu = np.zeros(model.dim, dtype=np.float32)
    _kernels.pair_update(model.input_vectors, model.output_vectors, int(center), int(context),
                         negs if negs.size else np.zeros(1, np.int64), negs.size,
                         np.float32(lr), neu)


class NegativeTable:
    """Noise distribution over corpus nodes, proportional to frequency ** power.

    Holds the exact cumulative distribution plus a quantized lookup table
    (word2vec style) that the training loop samples in O(1). Each node's
    table share differs from its exact probability by less than one slot.
    """

    def __init__(self, node_frequency: np.ndarray, power: float = 0.75, table_size: int | None = None):
        freq = np.asarray(node_frequency, dtype=np.float64)
        self.support = np.flatnonzero(freq > 0).astype(np.int64)
        if self.support.size == 0:
            raise EmptyCorpus("no node has positive frequency")
        w = freq[self.support] ** power
        self.probs = w / w.sum()
        self.cdf = np.cumsum(self.probs)
        self.cdf[-1] = 1.0
        if table_size is None:
            table_size = int(np.clip(256 * self.support.size, 1 << 16, 1 << 23))
        ticks = (np.arange(table_size, dtype=np.float64) + 0.5) / table_size
        slot = np.minimum(np.searchsorted(self.cdf, ticks, side="right"), self.support.size - 1)
        self.table = self.support[slot]

    @classmethod
    def from_corpus(cls, corpus: PairCorpus, power: float = 0.75) -> "NegativeTable":
        return cls(corpus.node_frequency, power)

    def probability(self, v: int) -> float:
        i = np.searchsorted(self.support, v)
        if i < self.support.size and self.support[i] == v:
            return float(self.probs[i])
        return 0.0

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """Exact draws from the cumulative distribution."""
        idx = np.searchsorted(self.cdf, rng.random(size), side="right")
        return self.support[np.minimum(idx, self.support.size - 1)]


def train(model: EmbeddingModel, corpus: PairCorpus, table: NegativeTable | None = None,
          epochs: int = 5, lr_start: float = 0.025, lr_end: float = 1e-4,
          rng: np.random.Generator | int | None = None, workers: int = 1) -> EmbeddingModel:
    """Count-weighted SGNS over every pair occurrence of ``corpus``.

    Each epoch visits the walks in a fresh random order and, within a walk,
    every (center, context) occurrence in sequence. The learning rate decays
    linearly from ``lr_start`` to ``lr_end`` over all epochs. Rows of nodes
    that neither occur in the corpus nor in the noise support are untouched.

    ``workers > 1`` switches to unsynchronized parallel updates; results are
    then no longer bitwise reproducible.
    """
    total = corpus.total_pairs
    if total == 0:
        raise EmptyCorpus("corpus has no pairs")
    if table is None:
        table = NegativeTable.from_corpus(corpus)
    missing = [int(v) for v in corpus.nodes() if v not in model]
    missing += [int(v) for v in np.unique(table.table) if v not in model]
    if missing:
        raise MissingNode(f"not in vocabulary (extend first): {sorted(set(missing))[:5]}")
    rng = np.random.default_rng(rng)
    grand_total = float(total * epochs)
    done = 0
    for _ in range(epochs):
        order = rng.permutation(corpus.n_walks).astype(np.int64)
        seed = np.uint64(rng.integers(0, 2**63))
        args = (model.input_vectors, model.output_vectors, corpus.flat, corpus.offsets, order,
                corpus.window, table.table, model.negatives, lr_start, lr_end, grand_total, done, seed)
        if workers > 1:
            import numba

            numba.set_num_threads(min(workers, numba.config.NUMBA_NUM_THREADS))
            done = _kernels.train_epoch_hogwild(*args, max(workers * 4, 1))
        else:
            done = _kernels.train_epoch(*args)
    return model


def embeddings(model: EmbeddingModel) -> dict[int, np.ndarray]:
    return {int(v): model.input_vectors[v] for v in model.vocab}


def save_checkpoint(model: EmbeddingModel, path: str | os.PathLike, labels=None) -> None:
    """Binary checkpoint.

    Layout: ``SGNSCKPT1 <node_count> <d> <m>\\n`` then per node in id order a
    little-endian int64 id, uint32 label length, the UTF-8 label, and d
    float32 input entries followed by d float32 output entries.
    """
    name = labels if labels is not None else (lambda i: i)
    vocab = model.vocab
    with open(path, "wb") as fh:
        fh.write(_MAGIC + f" {vocab.size} {model.dim} {model.negatives}\n".encode())
        for v in vocab:
            lab = str(name(int(v))).encode("utf-8")
            fh.write(struct.pack("<qI", int(v), len(lab)))
            fh.write(lab)
            fh.write(model.input_vectors[v].astype("<f4").tobytes())
            fh.write(model.output_vectors[v].astype("<f4").tobytes())


def load_checkpoint(path: str | os.PathLike) -> tuple[EmbeddingModel, dict[int, str]]:
    with open(path, "rb") as fh:
        header = fh.readline().split()
        if not header or header[0] != _MAGIC:
            raise ValueError(f"{path}: not a checkpoint file")
        n, d, m = (int(x) for x in header[1:4])
        model = EmbeddingModel(d, m)
        rows = []
        labels = {}
        for _ in range(n):
            v, ln = struct.unpack("<qI", fh.read(12))
            labels[v] = fh.read(ln).decode("utf-8")
            zin = np.frombuffer(fh.read(4 * d), dtype="<f4")
            zout = np.frombuffer(fh.read(4 * d), dtype="<f4")
            rows.append((v, zin, zout))
    if rows:
        model._grow(max(v for v, _, _ in rows) + 1)
    for v, zin, zout in rows:
        model.input_vectors[v] = zin
        model.output_vectors[v] = zout
        model.present[v] = True
    return model, labels


def _fmt_row(vec: np.ndarray) -> str:
    # 9 significant digits round-trip float32 exactly
    return " ".join(f"{float(x):.9g}" for x in vec)


def write_embeddings(vectors: Mapping[int, np.ndarray], path: str | os.PathLike, labels=None,
                     nodes: Iterable[int] | None = None) -> None:
    """word2vec text format: ``N d`` then ``label f_1 ... f_d`` per node."""
    name = labels if labels is not None else (lambda i: i)
    keys = sorted(vectors) if nodes is None else sorted(nodes)
    dim = len(next(iter(vectors.values()))) if vectors else 0
    buf = io.StringIO()
    buf.write(f"{len(keys)} {dim}\n")
    for v in keys:
        buf.write(f"{name(v)} {_fmt_row(vectors[v])}\n")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(buf.getvalue())


def read_embeddings(path: str | os.PathLike) -> dict[Hashable, np.ndarray]:
    """Inverse of :func:`write_embeddings`, keyed by the label string (ints parsed)."""
    out: dict[Hashable, np.ndarray] = {}
    with open(path, encoding="utf-8") as fh:
        n, d = (int(x) for x in fh.readline().split())
        for line in fh:
            parts = line.split()
            if not parts:
                continue
            lab = parts[0]
            try:
                key: Hashable = int(lab)
            except ValueError:
                key = lab
            out[key] = np.array(parts[1:], dtype=np.float32)
            if out[key].shape[0] != d:
                raise ValueError(f"{path}: row for {lab} has {out[key].shape[0]} values, expected {d}")
    if len(out) != n:
        raise ValueError(f"{path}: header says {n} rows, found {len(out)}")
    return out
