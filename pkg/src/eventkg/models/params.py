from __future__ import annotations

from typing import NamedTuple

import numpy as np

MODEL_KINDS = ("transe", "ekl-skip", "ekl-concat", "ekl-rnn")

# Fixed order for checkpoints and gradient checks.
PARAM_ORDER = (
    "entity_emb", "relation_emb",
    "context_emb",
    "concat_proj", "concat_bias", "concat_out",
    "rnn_wxh", "rnn_whh", "rnn_bh", "rnn_out", "rnn_out_bias",
)

_KIND_ARRAYS = {
    "transe": (),
    "ekl-skip": ("context_emb",),
    "ekl-concat": ("concat_proj", "concat_bias", "concat_out"),
    "ekl-rnn": ("rnn_wxh", "rnn_whh", "rnn_bh", "rnn_out", "rnn_out_bias"),
}


class SparseGrad(NamedTuple):
    """Row-sparse gradient: ``values[i]`` belongs to row ``rows[i]`` (rows may repeat)."""

    rows: np.ndarray
    values: np.ndarray

    def dense(self, shape) -> np.ndarray:
        out = np.zeros(shape)
        np.add.at(out, self.rows, self.values)
        return out


class ModelParams:
    """Embedding tables plus the private parameters of one sequence objective.

    ``entity_emb`` rows are shared between the KG objective and the sequence
    objective; ``event_ids`` lists the event entities whose order indexes the
    context/output tables.
    """

    def __init__(self, kind: str, event_ids, arrays: dict[str, np.ndarray]):
        if kind not in MODEL_KINDS:
            raise ValueError(f"unknown model kind {kind!r}")
        expected = {"entity_emb", "relation_emb", *_KIND_ARRAYS[kind]}
        if set(arrays) != expected:
            raise ValueError(f"{kind} expects arrays {sorted(expected)}, got {sorted(arrays)}")
        self.kind = kind
        self.event_ids = np.asarray(event_ids, dtype=np.int64)
        self.arrays = {name: arrays[name] for name in PARAM_ORDER if name in arrays}
        n_entities = self.arrays["entity_emb"].shape[0]
        self.event_index = np.full(n_entities, -1, dtype=np.int64)
        self.event_index[self.event_ids] = np.arange(len(self.event_ids))

    def __getattr__(self, name):
        arrays = self.__dict__.get("arrays", {})
        if name in arrays:
            return arrays[name]
        raise AttributeError(name)

    @property
    def dim(self) -> int:
        return self.arrays["entity_emb"].shape[1]

    @property
    def n_entities(self) -> int:
        return self.arrays["entity_emb"].shape[0]

    @property
    def n_relations(self) -> int:
        return self.arrays["relation_emb"].shape[0]

    def copy(self) -> "ModelParams":
        return ModelParams(self.kind, self.event_ids.copy(),
                           {k: v.copy() for k, v in self.arrays.items()})

    def items(self):
        return self.arrays.items()

    def all_finite(self) -> bool:
        return all(np.isfinite(a).all() for a in self.arrays.values())


def _glorot(rng, shape):
    limit = np.sqrt(6.0 / (shape[0] + shape[1]))
    return rng.uniform(-limit, limit, size=shape)


def normalize_rows(table: np.ndarray, rows=None) -> None:
    if rows is None:
        rows = slice(None)
    block = table[rows]
    norms = np.linalg.norm(block, axis=1, keepdims=True)
    table[rows] = block / np.where(norms > 0, norms, 1.0)


def init_params(kind: str, n_entities: int, n_relations: int, event_ids, dim: int,
                rng: np.random.Generator, concat_width: int = 3,
                rnn_hidden: int | None = None) -> ModelParams:
    """TransE-style init: uniform in +-6/sqrt(d), then unit-normalized rows."""
    bound = 6.0 / np.sqrt(dim)
    ent = rng.uniform(-bound, bound, size=(n_entities, dim))
    rel = rng.uniform(-bound, bound, size=(n_relations, dim))
    normalize_rows(ent)
    normalize_rows(rel)
    arrays = {"entity_emb": ent, "relation_emb": rel}
    n_ev = len(event_ids)
    if kind == "ekl-skip":
        arrays["context_emb"] = np.zeros((n_ev, dim))
    elif kind == "ekl-concat":
        arrays["concat_proj"] = _glorot(rng, (dim, concat_width * dim))
        arrays["concat_bias"] = np.zeros(dim)
        arrays["concat_out"] = _glorot(rng, (n_ev, dim))
    elif kind == "ekl-rnn":
        hidden = rnn_hidden or dim
        arrays["rnn_wxh"] = _glorot(rng, (hidden, dim))
        arrays["rnn_whh"] = _glorot(rng, (hidden, hidden))
        arrays["rnn_bh"] = np.zeros(hidden)
        arrays["rnn_out"] = _glorot(rng, (n_ev, hidden))
        arrays["rnn_out_bias"] = np.zeros(n_ev)
    return ModelParams(kind, event_ids, arrays)
