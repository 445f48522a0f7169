import json
from dataclasses import replace

import numpy as np
import pytest

from dynembed import sgns
from dynembed.graph import Snapshot, compute_delta
from dynembed.pipeline import RunConfig, StepFailed, StepReport, bench, run_pipeline, sweep
from dynembed.selector import Reservoir, select_nodes
from dynembed.synthetic import growing_sbm, grid_toy, random_evolving

SMALL = RunConfig(walks_per_node=4, walk_length=20, window=3, dim=16, epochs=1, ks=(5,), lp_min_pairs=20)


def test_defaults():
    cfg = RunConfig()
    assert (cfg.alpha, cfg.beta, cfg.walks_per_node, cfg.walk_length, cfg.window) == (0.2, 0.5, 20, 80, 10)
    assert (cfg.dim, cfg.negatives, cfg.epochs, cfg.lr_start, cfg.lr_end) == (128, 5, 5, 0.025, 1e-4)
    assert cfg.ks == (10, 100) and set(cfg.tasks) == {"GR", "CGR", "LP"}


def test_single_snapshot_is_offline_only():
    g = growing_sbm(steps=0, rng=0).snapshots
    reps = run_pipeline(g, SMALL)
    assert [r.stage for r in reps] == ["offline"]
    assert reps[0].metric("LP") is None and reps[0].metric("GR", 5) is not None


def test_identical_snapshots_select_only_diverse():
    g = growing_sbm(steps=0, rng=0).snapshots[0]
    snaps = [g, Snapshot.from_edges(g.edges, 1)]
    reps = run_pipeline(snaps, replace(SMALL, beta=1.0), evaluate=False)
    assert reps[1].n_affected == 0 and reps[1].n_unseen == 0
    assert reps[1].n_diverse == reps[1].budget == 20


def test_grid_selection_matches_standalone_selector():
    sc = grid_toy()
    extra = Snapshot.from_edges(set(sc.snapshots[1].edges) | {(40, 49), (41, 50)}, 2)
    snaps = sc.snapshots + [extra]
    cfg = replace(SMALL, alpha=0.1, tasks=("GR",))
    reps = run_pipeline(snaps, cfg, evaluate=False)
    res = Reservoir()
    for t in (1, 2):
        sel, res = select_nodes(snaps[t - 1], snaps[t], compute_delta(snaps[t - 1], snaps[t]), res,
                                cfg.selector, np.random.default_rng([cfg.seed, t, 3]))
        r = reps[t]
        assert (r.n_unseen, r.n_affected, r.n_diverse, r.budget) == (
            len(sel.unseen), len(sel.affected), len(sel.diverse), sel.budget)


def test_every_node_embedded_and_warm_start_chain(tmp_path):
    snaps = growing_sbm(steps=3, rng=1).snapshots
    digests = {}

    def hook(t, state, rep):
        digests[t] = state.model.digest()
        assert all(v in state.model for v in snaps[t].nodes)

    reps = run_pipeline(snaps, SMALL, out_dir=tmp_path, on_step=hook)
    for t in range(len(snaps)):
        model, _ = sgns.load_checkpoint(tmp_path / str(t) / "model")
        assert model.digest() == digests[t]
    lines = (tmp_path / "report.jsonl").read_text().splitlines()
    assert len(lines) == len(snaps)
    back = [StepReport.from_dict(json.loads(x)) for x in lines]
    assert [b.to_dict() for b in back] == [r.to_dict() for r in reps]
    cfg = json.loads((tmp_path / "config.json").read_text())
    assert cfg["dim"] == 16
    assert (tmp_path / "0" / "emb.txt").read_text().startswith(f"{snaps[0].node_count} 16\n")


def test_checkpoint_carries_state_between_steps(tmp_path):
    snaps = growing_sbm(steps=2, rng=2).snapshots
    models = {}
    run_pipeline(snaps, SMALL, evaluate=False, out_dir=tmp_path,
                 on_step=lambda t, s, r: models.setdefault(t, s.model.copy()))
    for t in range(3):
        ck, _ = sgns.load_checkpoint(tmp_path / str(t) / "model")
        m = models[t]
        assert np.array_equal(ck.input_vectors[ck.vocab], m.input_vectors[m.vocab])
        assert np.array_equal(ck.output_vectors[ck.vocab], m.output_vectors[m.vocab])


def test_report_arithmetic_and_stages():
    snaps = growing_sbm(steps=3, rng=3).snapshots
    reps = run_pipeline(snaps, SMALL)
    assert reps[0].stage == "offline" and all(r.stage == "online" for r in reps[1:])
    for r in reps[1:]:
        assert r.n_affected + r.n_diverse == r.budget == round(0.2 * r.n_nodes)
        assert r.n_unseen == 5 and r.metric("CGR", 5) is not None
    assert reps[-1].metric("LP") is None and reps[-2].metric("LP") is not None


def test_determinism_excluding_timings():
    snaps = random_evolving(n_nodes=30, steps=4, rng=4)
    a = run_pipeline(snaps, SMALL)
    b = run_pipeline(snaps, SMALL)
    assert [r.to_dict(timings=False) for r in a] == [r.to_dict(timings=False) for r in b]


def test_removals_and_vanishing_nodes():
    snaps = random_evolving(n_nodes=30, steps=5, p=0.1, churn=0.6, rng=6)
    reps = run_pipeline(snaps, SMALL)
    assert len(reps) == 5


def test_failure_reports_step_index():
    snaps = growing_sbm(steps=2, rng=0).snapshots
    with pytest.raises(StepFailed) as err:
        run_pipeline(snaps, replace(SMALL, tasks=("XX",)))
    assert err.value.t == 0
    with pytest.raises(ValueError):
        run_pipeline([], SMALL)


def test_bench_alpha_zero_is_cheapest():
    snaps = growing_sbm(steps=2, rng=0).snapshots
    rows = bench(snaps, SMALL, [0.0, 0.5])
    assert rows[0].mean_selected == 5 and rows[1].mean_selected > 50
    assert rows[0].mean_online_ms < rows[1].mean_online_ms
    with pytest.raises(ValueError):
        bench(snaps[:1], SMALL, [0.2])


def test_sweep_grid():
    snaps = growing_sbm(steps=2, rng=0).snapshots
    rows = sweep(snaps, replace(SMALL, tasks=("GR",)), [0.1, 0.3], [0.0, 1.0])
    assert {(r.alpha, r.beta) for r in rows} == {(0.1, 0.0), (0.1, 1.0), (0.3, 0.0), (0.3, 1.0)}
    assert all(r.task == "GR" and r.n_steps == 2 for r in rows)


def test_run_config_round_trip():
    cfg = replace(SMALL, tasks=("GR", "LP"), swap_beta=True)
    from dataclasses import asdict
    assert RunConfig.from_dict(json.loads(json.dumps(asdict(cfg)))) == cfg
