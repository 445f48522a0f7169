"""Edge-stream parsing, S1/S2/S3 slicing, and the snapshot-directory format.

Edge stream: one event per line, ``u v timestamp`` separated by tabs or
spaces; extra columns are ignored, ``#``/``%`` lines are comments.

Snapshot directory: one file ``t_<index>.edges`` per snapshot, one ``u v``
edge per line.
"""

from __future__ import annotations

import os
import re
from dataclasses import dataclass
from pathlib import Path
from typing import BinaryIO, Hashable, Iterable, TextIO

from .graph import NodeIndex, Snapshot

DEFAULT_COUNTS = {"S1": 21, "S2": 21, "S3": 100}

_FNAME = re.compile(r"^t_(\d+)\.edges$")


class ParseError(ValueError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class InsufficientSpan(ValueError):
    """The stream is too short for the requested number of minimum intervals."""


@dataclass(frozen=True)
class EdgeEvent:
    u: Hashable
    v: Hashable
    timestamp: int


@dataclass(frozen=True)
class SliceScheme:
    """How to cut a stream into cumulative snapshots.

    ``interval`` is the dataset's minimum interval for S1/S3. For S2 it is
    optional; when omitted the span is split into ``snapshot_count`` equal
    periods.
    """

    kind: str = "S1"
    interval: int | None = None
    snapshot_count: int | None = None

    def __post_init__(self):
        if self.kind not in DEFAULT_COUNTS:
            raise ValueError(f"unknown scheme {self.kind!r}")
        if self.snapshot_count is None:
            object.__setattr__(self, "snapshot_count", DEFAULT_COUNTS[self.kind])
        if self.snapshot_count < 1:
            raise ValueError("snapshot_count must be >= 1")
        if self.kind in ("S1", "S3") and (self.interval is None or self.interval <= 0):
            raise ValueError(f"{self.kind} needs a positive interval")


def parse_label(tok: str) -> Hashable:
    """Integer labels stay integers; anything else is kept as a string."""
    try:
        return int(tok)
    except ValueError:
        return tok


def parse_edge_stream(source: str | bytes | TextIO | BinaryIO | Iterable[str]) -> list[EdgeEvent]:
    """Parse a timestamped edge stream, sorted stably by timestamp."""
    if isinstance(source, bytes):
        lines: Iterable = source.decode("utf-8").splitlines()
    elif isinstance(source, str):
        lines = source.splitlines()
    else:
        lines = source
    events = []
    for lineno, raw in enumerate(lines, start=1):
        line = raw.decode("utf-8") if isinstance(raw, bytes) else raw
        line = line.strip()
        if not line or line[0] in "#%":
            continue
        parts = line.split()
        if len(parts) < 3:
            raise ParseError(lineno, f"expected 'u v timestamp', got {line!r}")
        try:
            ts = int(parts[2])
        except ValueError:
            try:
                f = float(parts[2])
            except ValueError:
                raise ParseError(lineno, f"non-numeric timestamp {parts[2]!r}") from None
            if not f.is_integer():
                raise ParseError(lineno, f"non-integer timestamp {parts[2]!r}")
            ts = int(f)
        events.append(EdgeEvent(parse_label(parts[0]), parse_label(parts[1]), ts))
    events.sort(key=lambda e: e.timestamp)
    return events


def read_edge_stream(path: str | os.PathLike) -> list[EdgeEvent]:
    with open(path, "rb") as fh:
        return parse_edge_stream(fh)


def cut_points(events: list[EdgeEvent], scheme: SliceScheme) -> list[int]:
    """Inclusive timestamp upper bounds, one per snapshot, oldest first.

    S1/S3 cuts are anchored at the maximum timestamp and step back by the
    interval. S2 splits ``[min_ts, max_ts]`` into equal periods (or uses the
    explicit interval, still anchored at the maximum timestamp).
    """
    if not events:
        raise ValueError("cannot slice an empty stream")
    lo, hi = events[0].timestamp, events[-1].timestamp
    n = scheme.snapshot_count
    if scheme.kind in ("S1", "S3") or scheme.interval is not None:
        step = scheme.interval
        if hi - lo < (n - 1) * step:
            raise InsufficientSpan(
                f"{scheme.kind} needs {n} cuts of {step} but the stream spans {hi - lo}"
            )
        return [hi - (n - 1 - k) * step for k in range(n)]
    span = hi - lo
    # integer arithmetic keeps the last cut exactly at max_ts
    return [lo + (span * (k + 1)) // n for k in range(n)]


def slice_stream(
    events: list[EdgeEvent], scheme: SliceScheme, index: NodeIndex | None = None
) -> tuple[list[Snapshot], NodeIndex]:
    """Cumulative snapshots: snapshot k holds every edge with timestamp <= cut k."""
    if index is None:
        index = NodeIndex()
    cuts = cut_points(events, scheme)
    ids = [(index.intern(e.u), index.intern(e.v), e.timestamp) for e in events]
    snaps = []
    edges: list[tuple[int, int]] = []
    pos = 0
    for k, cut in enumerate(cuts):
        while pos < len(ids) and ids[pos][2] <= cut:
            edges.append((ids[pos][0], ids[pos][1]))
            pos += 1
        snaps.append(Snapshot.from_edges(edges, time_index=k))
    return snaps, index


def write_snapshot_dir(
    snapshots: list[Snapshot], path: str | os.PathLike, index: NodeIndex | None = None
) -> None:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    for k, snap in enumerate(snapshots):
        name = index.label_of if index is not None else (lambda i: i)
        with open(out / f"t_{k}.edges", "w", encoding="utf-8") as fh:
            for u, v in sorted(snap.edges):
                fh.write(f"{name(u)} {name(v)}\n")


def load_snapshot_dir(
    path: str | os.PathLike, index: NodeIndex | None = None
) -> tuple[list[Snapshot], NodeIndex]:
    """Read ``t_<k>.edges`` files in index order; labels interned in file order."""
    root = Path(path)
    if not root.is_dir():
        raise FileNotFoundError(f"{root} is not a directory")
    files = []
    for entry in root.iterdir():
        m = _FNAME.match(entry.name)
        if m:
            files.append((int(m.group(1)), entry))
    if not files:
        raise FileNotFoundError(f"no t_<k>.edges files in {root}")
    files.sort()
    if index is None:
        index = NodeIndex()
    snaps = []
    for k, (_, fpath) in enumerate(files):
        edges = []
        with open(fpath, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line or line[0] in "#%":
                    continue
                parts = line.split()
                if len(parts) < 2:
                    raise ParseError(lineno, f"{fpath.name}: expected 'u v', got {line!r}")
                edges.append((index.intern(parse_label(parts[0])), index.intern(parse_label(parts[1]))))
        snaps.append(Snapshot.from_edges(edges, time_index=k))
    return snaps, index
