"""Command line entry point: slice, embed, eval, bench, sweep and synth."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import asdict, fields, replace
from pathlib import Path

import numpy as np

from . import sgns, synthetic
from .evaluator import SIMILARITIES, Embedding
from .graph import NodeIndex, Snapshot, compute_delta
from .pipeline import RunConfig, StepFailed, bench, evaluate_embedding, run_pipeline, sweep
from .slicer import (DEFAULT_COUNTS, InsufficientSpan, ParseError, SliceScheme, load_snapshot_dir,
                     read_edge_stream, slice_stream, write_snapshot_dir)
from .slicer import parse_label

log = logging.getLogger("dynembed")

_TUPLE_FIELDS = {"tasks": str, "ks": int}


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    """One flag per RunConfig field, named after it."""
    base = RunConfig()
    for f in fields(RunConfig):
        flag = "--" + f.name.replace("_", "-")
        default = getattr(base, f.name)
        if f.name in _TUPLE_FIELDS:
            p.add_argument(flag, nargs="+", type=_TUPLE_FIELDS[f.name], default=None,
                           help=f"default: {' '.join(map(str, default))}")
        elif isinstance(default, bool):
            p.add_argument(flag, action="store_true", default=None)
        elif f.name == "similarity":
            p.add_argument(flag, choices=SIMILARITIES, default=None, help=f"default: {default}")
        else:
            p.add_argument(flag, type=type(default), default=None, help=f"default: {default}")
    p.add_argument("--deterministic", action="store_true",
                   help="single-threaded training (overrides --workers)")


def _run_config(args: argparse.Namespace) -> RunConfig:
    kw = {}
    for f in fields(RunConfig):
        val = getattr(args, f.name, None)
        if val is not None:
            kw[f.name] = tuple(val) if f.name in _TUPLE_FIELDS else val
    cfg = RunConfig(**kw)
    if getattr(args, "deterministic", False):
        cfg = replace(cfg, workers=1)
    return cfg


def _load(path) -> tuple[list[Snapshot], NodeIndex]:
    snaps, index = load_snapshot_dir(path)
    log.info("loaded %d snapshots from %s", len(snaps), path)
    return snaps, index


def cmd_slice(args) -> int:
    interval = args.interval_seconds
    scheme = SliceScheme(args.scheme, interval=interval, snapshot_count=args.count)
    events = read_edge_stream(args.stream)
    snaps, index = slice_stream(events, scheme)
    write_snapshot_dir(snaps, args.out, index)
    print("t\tnodes\tedges")
    for s in snaps:
        print(f"{s.time_index}\t{s.node_count}\t{s.edge_count}")
    return 0


def cmd_embed(args) -> int:
    cfg = _run_config(args)
    snaps, index = _load(args.snapshots)
    reports = run_pipeline(snaps, cfg, evaluate=not args.no_eval, out_dir=args.out, index=index)
    for rep in reports:
        vals = " ".join(f"{m.task}{'@' + str(m.k) if m.k else ''}={m.value:.4f}" for m in rep.metrics)
        print(f"t={rep.t} {rep.stage} |V|={rep.n_nodes} |E|={rep.n_edges} "
              f"sel={rep.n_unseen}/{rep.n_affected}/{rep.n_diverse} {rep.embed_ms:.0f}ms {vals}".rstrip())
    return 0


def _embedding_at(run: Path, t: int, index: NodeIndex, similarity: str) -> Embedding:
    ckpt = run / str(t) / "model"
    if ckpt.exists():
        model, labels = sgns.load_checkpoint(ckpt)
        ids, rows = [], []
        for v, lab in labels.items():
            node = index.get(parse_label(lab))
            if node is not None:
                ids.append(node)
                rows.append(v)
        ctx = model.output_vectors[rows] if similarity == "pair" else None
        return Embedding(ids, model.input_vectors[rows], ctx, similarity)
    if similarity == "pair":
        raise FileNotFoundError(f"{ckpt} missing; pair similarity needs a checkpoint")
    vecs = sgns.read_embeddings(run / str(t) / "emb.txt")
    mapped = {index.get(lab): vec for lab, vec in vecs.items() if index.get(lab) is not None}
    return Embedding.from_vectors(mapped, similarity)


def cmd_eval(args) -> int:
    cfg = _run_config(args)
    snaps, index = _load(args.snapshots)
    run = Path(args.run)
    steps = sorted(int(p.name) for p in run.iterdir() if p.is_dir() and p.name.isdigit())
    out = open(args.out, "w", encoding="utf-8") if args.out else sys.stdout
    try:
        for t in steps:
            if t >= len(snaps):
                raise ValueError(f"run has step {t} but only {len(snaps)} snapshots were given")
            emb = _embedding_at(run, t, index, cfg.similarity)
            changed = None
            if t > 0:
                changed = {v for v in compute_delta(snaps[t - 1], snaps[t]).endpoints()
                           if snaps[t].has_node(v)}
            for rec in evaluate_embedding(emb, snaps, t, cfg, changed):
                out.write(rec.to_json() + "\n")
    finally:
        if out is not sys.stdout:
            out.close()
    return 0


def _bench_input(args) -> list[Snapshot]:
    if args.snapshots:
        return _load(args.snapshots)[0]
    return synthetic.bench_stream(n_nodes=args.synthetic_nodes, steps=args.synthetic_steps, rng=args.seed or 0)


def cmd_bench(args) -> int:
    cfg = _run_config(args)
    rows = bench(_bench_input(args), cfg, args.alphas)
    if args.json:
        print(json.dumps([asdict(r) for r in rows], indent=2))
        return 0
    ref = rows[0].mean_online_ms if rows else 0.0
    print("alpha\tmean_online_ms\tratio\tmean_selected\tsteps")
    for r in rows:
        ratio = r.mean_online_ms / ref if ref else float("nan")
        print(f"{r.alpha:g}\t{r.mean_online_ms:.1f}\t{ratio:.3f}\t{r.mean_selected:.1f}\t{r.steps}")
    return 0


def cmd_sweep(args) -> int:
    cfg = _run_config(args)
    snaps = _load(args.snapshots)[0]
    rows = sweep(snaps, cfg, args.alphas, args.betas)
    if args.json:
        print(json.dumps([asdict(r) for r in rows], indent=2))
        return 0
    print("alpha\tbeta\ttask\tk\tmean\tsteps")
    for r in rows:
        print(f"{r.alpha:g}\t{r.beta:g}\t{r.task}\t{r.k if r.k is not None else '-'}\t{r.mean:.4f}\t{r.n_steps}")
    return 0


def cmd_synth(args) -> int:
    rng = np.random.default_rng(args.seed)
    if args.kind == "sbm":
        snaps = synthetic.growing_sbm(steps=args.steps, rng=rng).snapshots
    elif args.kind == "grid":
        snaps = synthetic.grid_toy().snapshots
    else:
        snaps = synthetic.bench_stream(n_nodes=args.nodes, steps=args.steps, rng=rng)
    write_snapshot_dir(snaps, args.out)
    print(f"wrote {len(snaps)} snapshots to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dynembed", description="Incremental random-walk embeddings of evolving graphs.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="cmd", required=True)

    s = sub.add_parser("slice", help="timestamped edge stream -> snapshot directory")
    s.add_argument("stream")
    s.add_argument("out")
    s.add_argument("--scheme", choices=sorted(DEFAULT_COUNTS), default="S2")
    s.add_argument("--interval-seconds", "--interval", dest="interval_seconds", type=int, default=None,
                   help="cut width in timestamp units (required for S1/S3)")
    s.add_argument("--count", type=int, default=None, help="number of snapshots (scheme default if omitted)")
    s.set_defaults(fn=cmd_slice)

    e = sub.add_parser("embed", help="snapshot directory -> checkpoints, embeddings, reports")
    e.add_argument("snapshots")
    e.add_argument("--out", required=True, help="run directory")
    e.add_argument("--no-eval", action="store_true", help="skip GR/CGR/LP")
    _add_run_flags(e)
    e.set_defaults(fn=cmd_embed)

    v = sub.add_parser("eval", help="re-evaluate a run directory against snapshots")
    v.add_argument("snapshots")
    v.add_argument("run")
    v.add_argument("--out", default=None, help="write metric records here instead of stdout")
    _add_run_flags(v)
    v.set_defaults(fn=cmd_eval)

    b = sub.add_parser("bench", help="mean online step time per alpha")
    b.add_argument("snapshots", nargs="?", default=None, help="omit to use a synthetic stream")
    b.add_argument("--alphas", nargs="+", type=float, default=[0.2, 0.4, 0.6])
    b.add_argument("--synthetic-nodes", type=int, default=5000)
    b.add_argument("--synthetic-steps", type=int, default=3)
    b.add_argument("--json", action="store_true")
    _add_run_flags(b)
    b.set_defaults(fn=cmd_bench)

    w = sub.add_parser("sweep", help="mean metrics over an alpha x beta grid")
    w.add_argument("snapshots")
    w.add_argument("--alphas", nargs="+", type=float, default=[0.1, 0.2, 0.3])
    w.add_argument("--betas", nargs="+", type=float, default=[0.0, 0.5, 1.0])
    w.add_argument("--json", action="store_true")
    _add_run_flags(w)
    w.set_defaults(fn=cmd_sweep)

    y = sub.add_parser("synth", help="write a synthetic snapshot directory")
    y.add_argument("kind", choices=("sbm", "grid", "bench"))
    y.add_argument("out")
    y.add_argument("--steps", type=int, default=10)
    y.add_argument("--nodes", type=int, default=5000)
    y.add_argument("--seed", type=int, default=0)
    y.set_defaults(fn=cmd_synth)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.fn(args)
    except StepFailed as exc:
        print(f"dynembed: step {exc.t} failed: {exc.cause}", file=sys.stderr)
        return 3
    except (ParseError, InsufficientSpan, FileNotFoundError, ValueError) as exc:
        print(f"dynembed: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
