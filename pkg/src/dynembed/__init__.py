"""Incremental embeddings for evolving graphs.

Each snapshot is embedded by warm-starting a skip-gram model from the
previous one and re-walking only a selected subset of nodes: new nodes,
the nodes most affected by recent edge changes, and a uniform sample of
the rest.
"""

from .evaluator import (Embedding, LpTestSet, MetricRecord, RankedRetrieval, ap_at_k, auc,
                        build_lp_testset, graph_reconstruction, link_prediction, similarity)
from .graph import EdgeDelta, NodeIndex, Snapshot, apply_delta, compute_delta, neighbor_change_count
from .pipeline import RunConfig, StepReport, bench, run_pipeline, sweep
from .selector import Reservoir, Selection, SelectorConfig, budget_split, select_nodes, update_reservoir
from .sgns import EmbeddingModel, NegativeTable, extend_vocab, init_model, load_checkpoint, save_checkpoint, train
from .slicer import SliceScheme, load_snapshot_dir, parse_edge_stream, slice_stream, write_snapshot_dir
from .walker import PairCorpus, WalkConfig, generate_corpus, random_walk

__version__ = "0.1.0"
