"""Online node selection: reservoir upkeep, inertia scoring, top-k and diverse sampling."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping

import numpy as np

from .graph import EdgeDelta, Snapshot, neighbor_change_count


class Reservoir(dict):
    """node id -> accumulated, not yet spent, change count (always >= 1)."""

    def copy(self) -> "Reservoir":
        return Reservoir(self)


@dataclass(frozen=True)
class SelectorConfig:
    alpha: float = 0.2
    beta: float = 0.5
    seed: int = 0
    # give beta's share to the diverse nodes instead (the pseudocode's reading)
    swap_beta: bool = False

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha}")
        if not 0.0 <= self.beta <= 1.0:
            raise ValueError(f"beta must lie in [0, 1], got {self.beta}")


@dataclass(frozen=True)
class Selection:
    unseen: frozenset[int] = field(default_factory=frozenset)
    affected: frozenset[int] = field(default_factory=frozenset)
    diverse: frozenset[int] = field(default_factory=frozenset)
    budget: int = 0
    target_affected: int = 0

    @property
    def all(self) -> frozenset[int]:
        return self.unseen | self.affected | self.diverse

    @property
    def deficit(self) -> int:
        return self.target_affected - len(self.affected)


def round_half_up(x: float | Fraction) -> int:
    """Round to nearest integer, halves up; exact for decimal inputs like 0.2 * 25."""
    q = x if isinstance(x, Fraction) else Fraction(str(x))
    return int((q + Fraction(1, 2)).__floor__())


def budget_split(n_nodes: int, alpha: float, beta: float, swap_beta: bool = False) -> tuple[int, int]:
    """``(budget, target_affected)`` for a snapshot with ``n_nodes`` members."""
    a, b = Fraction(str(alpha)), Fraction(str(beta))
    budget = round_half_up(a * n_nodes)
    share = 1 - b if swap_beta else b
    return budget, round_half_up(share * budget)


def update_reservoir(reservoir: Mapping[int, int], delta: EdgeDelta, curr: Snapshot | None = None) -> Reservoir:
    """Fold this step's per-node change counts into the reservoir.

    With ``curr`` given, entries for nodes that have no edge at t are purged.
    """
    out = Reservoir(reservoir)
    for v, n in delta.incidence().items():
        out[v] = out.get(v, 0) + n
    if curr is not None:
        for v in [v for v in out if not curr.has_node(v)]:
            del out[v]
    return out


def score(v: int, reservoir: Mapping[int, int], prev: Snapshot, curr: Snapshot) -> float:
    """Inertia score: (changes now + accumulated changes before) / prior degree.

    ``reservoir`` is the state *before* this step's update.
    """
    changes = neighbor_change_count(prev, curr, v)
    return (changes + reservoir.get(v, 0)) / max(prev.degree(v), 1)


def score_all(reservoir_after: Mapping[int, int], prev: Snapshot, exclude=frozenset()) -> dict[int, float]:
    """Scores from the already-updated reservoir, whose counts fold in this step's changes."""
    return {
        v: c / max(prev.degree(v), 1)
        for v, c in reservoir_after.items()
        if v not in exclude
    }


def top_k_affected(scores: Mapping[int, float], k: int) -> set[int]:
    """The k highest scores, ties to the smaller id, without a full sort."""
    if k <= 0 or not scores:
        return set()
    ids = np.fromiter(scores.keys(), dtype=np.int64, count=len(scores))
    vals = np.fromiter(scores.values(), dtype=np.float64, count=len(scores))
    if k >= len(ids):
        return set(ids.tolist())
    # introselect for the k-th largest value, then resolve the boundary ties by id
    kth = np.partition(vals, len(vals) - k)[len(vals) - k]
    above = ids[vals > kth]
    tied = np.sort(ids[vals == kth])
    return set(above.tolist()) | set(tied[: k - len(above)].tolist())


def select_nodes(
    prev: Snapshot,
    curr: Snapshot,
    delta: EdgeDelta,
    reservoir: Mapping[int, int],
    cfg: SelectorConfig,
    rng: np.random.Generator,
) -> tuple[Selection, Reservoir]:
    res = update_reservoir(reservoir, delta, curr)
    unseen = frozenset(v for v in curr if not prev.has_node(v))

    budget, target = budget_split(curr.node_count, cfg.alpha, cfg.beta, cfg.swap_beta)
    scores = score_all(res, prev, exclude=unseen)
    affected = frozenset(top_k_affected(scores, target))

    tabu = affected | unseen
    pool = np.array([v for v in curr if v not in tabu], dtype=np.int64)
    # affected slots the reservoir could not fill are handed to the diverse sample
    n_diverse = min(budget - len(affected), len(pool))
    if n_diverse > 0:
        diverse = frozenset(rng.choice(pool, size=n_diverse, replace=False).tolist())
    else:
        diverse = frozenset()

    sel = Selection(unseen, affected, diverse, budget=budget, target_affected=target)
    for v in sel.all:
        res.pop(v, None)
    return sel, res
