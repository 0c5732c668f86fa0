"""Event occurrences, sessionization and training-instance extraction."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

DEFAULT_GAP_MS = 5000
FULL = "full"


class EventOccurrence(NamedTuple):
    timestamp: int
    event: int


@dataclass
class SequenceDataset:
    """Ordered event-entity sequences (entity ids)."""

    sequences: list[np.ndarray] = field(default_factory=list)

    def __post_init__(self):
        self.sequences = [np.asarray(s, dtype=np.int64) for s in self.sequences]

    def __len__(self):
        return len(self.sequences)

    def __iter__(self):
        return iter(self.sequences)

    def __getitem__(self, i):
        return self.sequences[i]

    @property
    def lengths(self) -> np.ndarray:
        return np.array([len(s) for s in self.sequences], dtype=np.int64)

    def flatten(self) -> np.ndarray:
        if not self.sequences:
            return np.zeros(0, dtype=np.int64)
        return np.concatenate(self.sequences)


def sessionize(occurrences, gap_ms: int = DEFAULT_GAP_MS) -> SequenceDataset:
    """Split occurrences into sequences wherever the inter-arrival gap exceeds ``gap_ms``.

    Input is stably sorted by timestamp first, so ties keep their given order.
    """
    if gap_ms <= 0:
        raise ValueError("gap_ms must be positive")
    if len(occurrences) == 0:
        return SequenceDataset([])
    ts = np.fromiter((o[0] for o in occurrences), dtype=np.int64, count=len(occurrences))
    ev = np.fromiter((o[1] for o in occurrences), dtype=np.int64, count=len(occurrences))
    order = np.argsort(ts, kind="stable")
    ts, ev = ts[order], ev[order]
    cuts = np.flatnonzero(np.diff(ts) > gap_ms) + 1
    return SequenceDataset(np.split(ev, cuts))


def _window_offsets(window: int) -> np.ndarray:
    return np.array([o for o in range(-window, window + 1) if o != 0], dtype=np.int64)


def skipgram_pairs(ds: SequenceDataset, window: int) -> np.ndarray:
    """All (center, context) pairs within ``window`` positions, as an ``(n, 2)`` array.

    Scan order: sequence, then center position, then context position ascending.
    """
    if window < 1:
        raise ValueError("window must be >= 1")
    offsets = _window_offsets(window)
    chunks = []
    for seq in ds:
        m = len(seq)
        if m < 2:
            continue
        pos = np.arange(m)[:, None] + offsets[None, :]
        valid = (pos >= 0) & (pos < m)
        centers = np.broadcast_to(seq[:, None], pos.shape)[valid]
        contexts = seq[pos[valid]]
        chunks.append(np.stack([centers, contexts], axis=1))
    if not chunks:
        return np.zeros((0, 2), dtype=np.int64)
    return np.concatenate(chunks)


class PrefixInstances:
    """Prefix -> next-event instances stored as offsets into the flattened corpus.

    Instance ``i`` has target ``flat[ends[i]]`` and prefix ``flat[starts[i]:ends[i]]``.
    Padded batches are materialized on demand with :meth:`batch`, which keeps
    memory linear in the corpus even for full-prefix (RNN) extraction.
    """

    def __init__(self, flat, starts, ends, width):
        self.flat = np.asarray(flat, dtype=np.int64)
        self.starts = np.asarray(starts, dtype=np.int64)
        self.ends = np.asarray(ends, dtype=np.int64)
        self.width = width

    def __len__(self):
        return len(self.ends)

    def __getitem__(self, i):
        return tuple(self.flat[self.starts[i]:self.ends[i]].tolist()), int(self.flat[self.ends[i]])

    @property
    def targets(self) -> np.ndarray:
        return self.flat[self.ends]

    @property
    def lengths(self) -> np.ndarray:
        return self.ends - self.starts

    def batch(self, idx=None, width: int | None = None):
        """Return ``(prefixes, targets)``; prefixes left-padded with -1 to a common width."""
        if idx is None:
            idx = np.arange(len(self))
        idx = np.asarray(idx, dtype=np.int64)
        starts, ends = self.starts[idx], self.ends[idx]
        lengths = ends - starts
        if width is None:
            width = int(lengths.max()) if len(idx) else 0
        cols = np.arange(width)[None, :] - width
        pos = ends[:, None] + cols
        valid = pos >= starts[:, None]
        prefixes = np.full((len(idx), width), -1, dtype=np.int64)
        prefixes[valid] = self.flat[pos[valid]]
        return prefixes, self.flat[ends]


def prefix_instances(ds: SequenceDataset, width: int | str = FULL) -> PrefixInstances:
    """One instance per position k >= 2 of every sequence, predicting ``e_k``.

    ``width`` bounds the prefix to the ``width`` immediate predecessors; ``"full"``
    keeps all of them.
    """
    full = width == FULL
    if not full and (not isinstance(width, (int, np.integer)) or width < 1):
        raise ValueError("width must be a positive integer or 'full'")
    flat = ds.flatten()
    starts, ends = [], []
    offset = 0
    for seq in ds:
        m = len(seq)
        if m >= 2:
            k = np.arange(1, m)
            ends.append(offset + k)
            s = np.zeros_like(k) if full else np.maximum(0, k - width)
            starts.append(offset + s)
        offset += m
    if ends:
        starts_arr, ends_arr = np.concatenate(starts), np.concatenate(ends)
    else:
        starts_arr = ends_arr = np.zeros(0, dtype=np.int64)
    return PrefixInstances(flat, starts_arr, ends_arr, None if full else int(width))


def read_occurrences(path, kg) -> list[EventOccurrence]:
    """Read a ``timestamp_ms,event`` CSV, resolving event names through ``kg``."""
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["timestamp_ms", "event"]:
            raise ValueError(f"{path}: expected header 'timestamp_ms,event'")
        for row in reader:
            out.append(EventOccurrence(int(row[0]), kg.entity_id(row[1])))
    return out


def write_occurrences(path, occurrences, kg) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write("timestamp_ms,event\n")
        for ts, ev in occurrences:
            fh.write(f"{ts},{kg.entities[ev]}\n")


def read_sequences(path, kg) -> SequenceDataset:
    """One sequence per line, space-separated event entity names."""
    seqs = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            names = line.split()
            if names:
                seqs.append([kg.entity_id(n) for n in names])
    return SequenceDataset(seqs)


def write_sequences(path, ds: SequenceDataset, kg) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for seq in ds:
            fh.write(" ".join(kg.entities[e] for e in seq.tolist()) + "\n")


def load_sequences(path, kg, gap_ms: int = DEFAULT_GAP_MS) -> SequenceDataset:
    """Sequence file, or an occurrence CSV (``.csv``) that gets sessionized."""
    if str(path).endswith(".csv"):
        return sessionize(read_occurrences(path, kg), gap_ms)
    return read_sequences(path, kg)
