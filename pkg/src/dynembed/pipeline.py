"""Step-by-step orchestration: offline embed at t=0, then select, walk and warm-start train."""

from __future__ import annotations

import json
import logging
import os
import time
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import sgns
from .evaluator import (Embedding, InsufficientPairs, MetricRecord, NoQueries, build_lp_testset,
                        graph_reconstruction, link_prediction)
from .graph import NodeIndex, Snapshot, compute_delta
from .selector import Reservoir, SelectorConfig, select_nodes
from .walker import WalkConfig, generate_corpus

log = logging.getLogger(__name__)

TIMING_FIELDS = ("embed_ms", "checkpoint_ms", "wall_ms")


class StepFailed(RuntimeError):
    def __init__(self, t: int, cause: BaseException):
        super().__init__(f"step {t} failed: {cause}")
        self.t = t
        self.cause = cause


@dataclass(frozen=True)
class RunConfig:
    alpha: float = 0.2
    beta: float = 0.5
    walks_per_node: int = 20
    walk_length: int = 80
    window: int = 10
    dim: int = 128
    negatives: int = 5
    epochs: int = 5
    lr_start: float = 0.025
    lr_end: float = 1e-4
    seed: int = 0
    eval_seed: int = 1
    tasks: tuple[str, ...] = ("GR", "CGR", "LP")
    ks: tuple[int, ...] = (10, 100)
    similarity: str = "pair"
    gr_fraction: float = 0.25
    lp_min_pairs: int = 100
    noise_power: float = 0.75
    swap_beta: bool = False
    workers: int = 1

    @property
    def walk(self) -> WalkConfig:
        return WalkConfig(self.walks_per_node, self.walk_length, self.window, self.seed)

    @property
    def selector(self) -> SelectorConfig:
        return SelectorConfig(self.alpha, self.beta, self.seed, self.swap_beta)

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        names = {f.name for f in fields(cls)}
        kw = {k: v for k, v in d.items() if k in names}
        for key in ("tasks", "ks"):
            if key in kw and kw[key] is not None:
                kw[key] = tuple(kw[key])
        return cls(**kw)


@dataclass
class StepReport:
    t: int
    stage: str
    n_nodes: int
    n_edges: int
    n_delta: int = 0
    n_unseen: int = 0
    n_affected: int = 0
    n_diverse: int = 0
    budget: int = 0
    n_pairs: int = 0
    embed_ms: float = 0.0
    checkpoint_ms: float = 0.0
    metrics: list[MetricRecord] = field(default_factory=list)

    def metric(self, task: str, k: int | None = None) -> MetricRecord | None:
        for m in self.metrics:
            if m.task == task and (k is None or m.k == k):
                return m
        return None

    def to_dict(self, timings: bool = True) -> dict:
        d = asdict(self)
        if not timings:
            for key in TIMING_FIELDS:
                d.pop(key, None)
            for m in d["metrics"]:
                for key in TIMING_FIELDS:
                    m.pop(key, None)
        return d

    def to_json(self, timings: bool = True) -> str:
        return json.dumps(self.to_dict(timings))

    @classmethod
    def from_dict(cls, d: dict) -> "StepReport":
        d = dict(d)
        d["metrics"] = [MetricRecord(**m) for m in d.get("metrics", [])]
        return cls(**d)


def _rng(cfg: RunConfig, t: int, stream: int) -> np.random.Generator:
    return np.random.default_rng([cfg.seed, t, stream])


def _eval_rng(cfg: RunConfig, t: int, stream: int) -> np.random.Generator:
    return np.random.default_rng([cfg.eval_seed, t, stream, 7])


def _ms(t0: float) -> float:
    return (time.perf_counter() - t0) * 1000.0


def evaluate_step(model: sgns.EmbeddingModel, snaps: Sequence[Snapshot], t: int, cfg: RunConfig,
                  changed: set[int] | None) -> list[MetricRecord]:
    emb = Embedding.from_model(model, cfg.similarity)
    return evaluate_embedding(emb, snaps, t, cfg, changed)


def evaluate_embedding(emb: Embedding, snaps: Sequence[Snapshot], t: int, cfg: RunConfig,
                       changed: set[int] | None) -> list[MetricRecord]:
    """GR/CGR against G^t and LP against G^{t+1}, for whichever tasks apply at t."""
    out = []
    g = snaps[t]
    for task in cfg.tasks:
        if task in ("GR", "CGR"):
            if task == "CGR" and changed is None:
                continue
            for k in cfg.ks:
                t0 = time.perf_counter()
                try:
                    res = graph_reconstruction(emb, g, task, changed=changed, sample_fraction=cfg.gr_fraction,
                                               k=k, rng=_eval_rng(cfg, t, 0))
                except NoQueries as exc:
                    log.info("t=%d %s@%d skipped: %s", t, task, k, exc)
                    continue
                out.append(MetricRecord(task, t, k, res.value, res.n_queries, res.n_skipped, _ms(t0)))
        elif task == "LP":
            if t + 1 >= len(snaps):
                continue
            t0 = time.perf_counter()
            try:
                ts = build_lp_testset(g, snaps[t + 1], emb, rng=_eval_rng(cfg, t, 1),
                                      min_pairs=cfg.lp_min_pairs)
            except InsufficientPairs as exc:
                log.info("t=%d LP skipped: %s", t, exc)
                continue
            val = link_prediction(emb, ts)
            out.append(MetricRecord("LP", t, None, val, 2 * len(ts.positives), ts.skipped, _ms(t0)))
        else:
            raise ValueError(f"unknown task {task!r}")
    return out


@dataclass
class StepState:
    """What one step hands to the next."""

    model: sgns.EmbeddingModel
    reservoir: Reservoir


def offline_step(g0: Snapshot, cfg: RunConfig, n_ids: int) -> tuple[StepState, StepReport]:
    t0 = time.perf_counter()
    corpus = generate_corpus(g0, g0.nodes, cfg.walk, rng=_rng(cfg, 0, 0), n_ids=n_ids)
    model = sgns.init_model(g0.nodes, cfg.dim, cfg.negatives, _rng(cfg, 0, 1))
    if corpus.total_pairs:
        table = sgns.NegativeTable.from_corpus(corpus, cfg.noise_power)
        sgns.train(model, corpus, table, cfg.epochs, cfg.lr_start, cfg.lr_end, _rng(cfg, 0, 2), cfg.workers)
    rep = StepReport(0, "offline", g0.node_count, g0.edge_count, n_unseen=g0.node_count,
                     n_pairs=corpus.total_pairs, embed_ms=_ms(t0))
    return StepState(model, Reservoir()), rep


def online_step(prev: Snapshot, curr: Snapshot, state: StepState, cfg: RunConfig, t: int,
                n_ids: int) -> tuple[StepState, StepReport, set[int]]:
    """Warm-start update of ``state.model`` (in place) from G^{t-1} to G^t."""
    t0 = time.perf_counter()
    delta = compute_delta(prev, curr)
    sel, reservoir = select_nodes(prev, curr, delta, state.reservoir, cfg.selector, _rng(cfg, t, 3))
    model = state.model
    # nodes back after a gap keep their old rows
    fresh = [v for v in sorted(sel.unseen) if v not in model]
    sgns.extend_vocab(model, fresh, _rng(cfg, t, 1))
    corpus = generate_corpus(curr, sel.all, cfg.walk, rng=_rng(cfg, t, 0), n_ids=n_ids)
    if corpus.total_pairs:
        table = sgns.NegativeTable.from_corpus(corpus, cfg.noise_power)
        sgns.train(model, corpus, table, cfg.epochs, cfg.lr_start, cfg.lr_end, _rng(cfg, t, 2), cfg.workers)
    rep = StepReport(t, "online", curr.node_count, curr.edge_count, n_delta=len(delta),
                     n_unseen=len(sel.unseen), n_affected=len(sel.affected), n_diverse=len(sel.diverse),
                     budget=sel.budget, n_pairs=corpus.total_pairs, embed_ms=_ms(t0))
    changed = {v for v in delta.endpoints() if curr.has_node(v)}
    return StepState(model, reservoir), rep, changed


def run_pipeline(snapshots: Sequence[Snapshot], cfg: RunConfig = RunConfig(), evaluate: bool = True,
                 out_dir: str | os.PathLike | None = None, index: NodeIndex | None = None,
                 on_step: Callable[[int, StepState, StepReport], None] | None = None) -> list[StepReport]:
    """Embed every snapshot in order and return one report per step.

    With ``out_dir``, writes ``<t>/model`` (checkpoint), ``<t>/emb.txt`` and
    appends each report to ``report.jsonl``.
    """
    if not snapshots:
        raise ValueError("need at least one snapshot")
    n_ids = max((max(s.nodes, default=-1) for s in snapshots), default=-1) + 1
    if index is not None:
        n_ids = max(n_ids, len(index))
    labels = index.label_of if index is not None else None
    out = Path(out_dir) if out_dir is not None else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.jsonl").write_text("")
        (out / "config.json").write_text(json.dumps(asdict(cfg), indent=2) + "\n")

    reports = []
    state = None
    for t, curr in enumerate(snapshots):
        try:
            if t == 0:
                state, rep = offline_step(curr, cfg, n_ids)
                changed = None
            else:
                state, rep, changed = online_step(snapshots[t - 1], curr, state, cfg, t, n_ids)
            if out is not None:
                t0 = time.perf_counter()
                step_dir = out / str(t)
                step_dir.mkdir(exist_ok=True)
                sgns.save_checkpoint(state.model, step_dir / "model", labels)
                sgns.write_embeddings(sgns.embeddings(state.model), step_dir / "emb.txt", labels,
                                      nodes=curr.nodes)
                rep.checkpoint_ms = _ms(t0)
            if evaluate:
                rep.metrics = evaluate_step(state.model, snapshots, t, cfg, changed)
        except Exception as exc:
            raise StepFailed(t, exc) from exc
        if out is not None:
            with open(out / "report.jsonl", "a", encoding="utf-8") as fh:
                fh.write(rep.to_json() + "\n")
        log.info("t=%d %s |V|=%d |E|=%d sel=%d/%d/%d %.0f ms", t, rep.stage, rep.n_nodes, rep.n_edges,
                 rep.n_unseen, rep.n_affected, rep.n_diverse, rep.embed_ms)
        if on_step is not None:
            on_step(t, state, rep)
        reports.append(rep)
    return reports


@dataclass
class BenchRow:
    alpha: float
    mean_online_ms: float
    steps: int
    step_ms: list[float]
    mean_selected: float


def bench(snapshots: Sequence[Snapshot], cfg: RunConfig, alphas: Sequence[float]) -> list[BenchRow]:
    """Mean online step time per alpha.

    The offline stage does not depend on alpha, so it runs once and each
    alpha continues from a copy of the same t=0 state.
    """
    if len(snapshots) < 2:
        raise ValueError("bench needs at least two snapshots")
    n_ids = max(max(s.nodes, default=-1) for s in snapshots) + 1
    base, _ = offline_step(snapshots[0], cfg, n_ids)
    rows = []
    for a in alphas:
        c = replace(cfg, alpha=a)
        state = StepState(base.model.copy(), base.reservoir.copy())
        times, sel = [], []
        for t in range(1, len(snapshots)):
            state, rep, _ = online_step(snapshots[t - 1], snapshots[t], state, c, t, n_ids)
            times.append(rep.embed_ms)
            sel.append(rep.n_unseen + rep.n_affected + rep.n_diverse)
        rows.append(BenchRow(a, float(np.mean(times)), len(times), times, float(np.mean(sel))))
    return rows


@dataclass
class SweepRow:
    alpha: float
    beta: float
    task: str
    k: int | None
    mean: float
    n_steps: int


def sweep(snapshots: Sequence[Snapshot], cfg: RunConfig, alphas: Sequence[float],
          betas: Sequence[float]) -> list[SweepRow]:
    """Mean metric over online steps for each (alpha, beta) on the grid."""
    rows = []
    for a in alphas:
        for b in betas:
            reps = run_pipeline(snapshots, replace(cfg, alpha=a, beta=b))
            acc: dict[tuple[str, int | None], list[float]] = {}
            for rep in reps:
                if rep.stage != "online":
                    continue
                for m in rep.metrics:
                    acc.setdefault((m.task, m.k), []).append(m.value)
            for (task, k), vals in sorted(acc.items(), key=lambda kv: (kv[0][0], kv[0][1] or 0)):
                rows.append(SweepRow(a, b, task, k, float(np.mean(vals)), len(vals)))
    return rows
