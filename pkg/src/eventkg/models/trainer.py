"""Joint SGD training of the KG objective plus ``alpha`` times a sequence objective."""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field, fields
from typing import Callable, NamedTuple

import numpy as np

from ..events import SequenceDataset, prefix_instances, skipgram_pairs
from ..kg import KnowledgeGraph
from .params import MODEL_KINDS, ModelParams, SparseGrad, init_params, normalize_rows
from .sequence import concat_loss_and_grad, rnn_loss_and_grad, skipgram_loss_and_grad
from .transe import NORMS, corrupt_batch, kg_loss_and_grad

MAX_EPOCHS = 100


class TrainingError(RuntimeError):
    """Non-finite loss; ``step`` is the 0-based global step index."""

    def __init__(self, step: int, message: str = "non-finite loss"):
        super().__init__(f"{message} at step {step}")
        self.step = step


@dataclass(frozen=True)
class TrainConfig:
    d: int = 50
    alpha: float = 1.0
    margin: float = 1.0
    lr: float = 0.01
    negatives: int = 5
    window: int = 5
    concat_width: int = 3
    rnn_hidden: int | None = None
    epochs: int = MAX_EPOCHS
    batch_kg: int = 128
    batch_seq: int = 512
    norm: str = "L1"
    seed: int = 0
    eval_interval: int = 5
    patience: int = 3

    def __post_init__(self):
        for name in ("d", "lr", "margin", "negatives", "window", "concat_width", "epochs",
                     "batch_kg", "batch_seq", "eval_interval", "patience"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.alpha < 0:
            raise ValueError("alpha must be >= 0")
        if self.rnn_hidden is not None and self.rnn_hidden <= 0:
            raise ValueError("rnn_hidden must be positive")
        if self.epochs > MAX_EPOCHS:
            raise ValueError(f"epochs is capped at {MAX_EPOCHS}")
        if self.norm not in NORMS:
            raise ValueError(f"norm must be one of {NORMS}")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "TrainConfig":
        known = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in data.items() if k in known})

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


class LossBreakdown(NamedTuple):
    kg_loss: float
    seq_loss: float
    joint: float


def _apply(params: ModelParams, name: str, grad, lr: float) -> None:
    table = params.arrays[name]
    if isinstance(grad, SparseGrad):
        np.add.at(table, grad.rows, -lr * grad.values)
    else:
        table -= lr * grad


def _check(loss: float, step: int) -> None:
    if not math.isfinite(loss):
        raise TrainingError(step)


def sequence_loss_and_grad(params: ModelParams, cfg: TrainConfig, batch, rng):
    if params.kind == "ekl-skip":
        return skipgram_loss_and_grad(params, batch, cfg.negatives, rng)
    prefixes, targets = batch
    if params.kind == "ekl-concat":
        return concat_loss_and_grad(params, prefixes, targets)
    if params.kind == "ekl-rnn":
        return rnn_loss_and_grad(params, prefixes, targets)
    raise ValueError(f"{params.kind} has no sequence objective")


def transe_step(params: ModelParams, cfg: TrainConfig, kg_batch, rng, kg_negatives=None,
                step: int = 0) -> float:
    """One plain TransE SGD step; returns the pre-update loss."""
    return joint_step(params, cfg, kg_batch, None, rng, kg_negatives, step, use_sequences=False).kg_loss


def kg_negatives_for(rng, n_entities: int, kg_batch: np.ndarray, negatives: int):
    """``negatives`` corruptions per positive; returns aligned (positives, negatives)."""
    pos = np.repeat(np.asarray(kg_batch).reshape(-1, 3), negatives, axis=0)
    return pos, corrupt_batch(rng, n_entities, pos)


def joint_step(params: ModelParams, cfg: TrainConfig, kg_batch, seq_batch, rng,
               kg_negatives=None, step: int = 0, use_sequences: bool = True) -> LossBreakdown:
    """One SGD step on ``L_kg + alpha * L_seq``.

    KG negatives are drawn before anything else touches ``rng`` (or passed in
    as an aligned ``(positives, negatives)`` pair). Entity rows touched by
    either objective are renormalized to unit L2 afterwards. With
    ``alpha == 0`` the sequence objective is skipped entirely.
    """
    if kg_negatives is None:
        kg_negatives = kg_negatives_for(rng, params.n_entities, kg_batch, cfg.negatives)
    pos, neg = kg_negatives
    kg_loss, kg_grads = kg_loss_and_grad(params, pos, neg, cfg.margin, cfg.norm)
    _check(kg_loss, step)

    seq_loss, seq_grads = 0.0, {}
    if (use_sequences and cfg.alpha != 0 and params.kind != "transe"
            and seq_batch is not None and len(seq_batch) > 0):
        seq_loss, seq_grads = sequence_loss_and_grad(params, cfg, seq_batch, rng)
        _check(seq_loss, step)
    joint = kg_loss + cfg.alpha * seq_loss
    _check(joint, step)

    ent = kg_grads["entity_emb"]
    if "entity_emb" in seq_grads:
        sg = seq_grads["entity_emb"]
        ent = SparseGrad(np.concatenate([ent.rows, sg.rows]),
                         np.concatenate([ent.values, cfg.alpha * sg.values]))
    _apply(params, "entity_emb", ent, cfg.lr)
    _apply(params, "relation_emb", kg_grads["relation_emb"], cfg.lr)
    for name, g in seq_grads.items():
        if name != "entity_emb":
            _apply(params, name, g, cfg.lr * cfg.alpha)
    normalize_rows(params.entity_emb, np.unique(ent.rows))
    return LossBreakdown(kg_loss, seq_loss, joint)


def build_instances(kind: str, sequences: SequenceDataset | None, cfg: TrainConfig):
    """Materialize the training instances of a sequence objective."""
    if kind == "transe" or sequences is None:
        return None
    if kind == "ekl-skip":
        return skipgram_pairs(sequences, cfg.window)
    if kind == "ekl-concat":
        return prefix_instances(sequences, cfg.concat_width)
    if kind == "ekl-rnn":
        return prefix_instances(sequences, "full")
    raise ValueError(f"unknown model kind {kind!r}")


class _Stream:
    """Endless shuffled mini-batches over ``n`` instances; reshuffles at each wrap."""

    def __init__(self, n: int, batch: int, rng: np.random.Generator):
        self.n, self.batch, self.rng = n, batch, rng
        self.perm = rng.permutation(n)
        self.pos = 0

    def next(self) -> np.ndarray:
        if self.pos >= self.n:
            self.perm = self.rng.permutation(self.n)
            self.pos = 0
        idx = self.perm[self.pos:self.pos + self.batch]
        self.pos += self.batch
        return idx


def _take(kind: str, instances, idx, cfg: TrainConfig):
    if kind == "ekl-skip":
        return instances[idx]
    width = cfg.concat_width if kind == "ekl-concat" else None
    return instances.batch(idx, width)


@dataclass
class TrainResult:
    params: ModelParams
    history: list[dict] = field(default_factory=list)
    best_epoch: int = 0
    best_metric: float = math.nan
    epochs_run: int = 0


ValidationHook = Callable[[ModelParams], float]


def train(kind: str, kg_train: KnowledgeGraph, sequences: SequenceDataset | None,
          cfg: TrainConfig, validation_hook: ValidationHook | None = None) -> TrainResult:
    """Train one model with early stopping on ``validation_hook`` (lower is better).

    An epoch is one shuffled pass over the training triples; every step also
    consumes one sequence mini-batch from an endlessly cycling stream. The
    hook runs before training and then every ``eval_interval`` epochs; training
    stops after ``patience`` evaluations without strict improvement and the
    earliest best parameters are returned.
    """
    if kind not in MODEL_KINDS:
        raise ValueError(f"unknown model kind {kind!r}")
    if kind != "transe" and cfg.alpha > 0 and (sequences is None or len(sequences) == 0):
        raise ValueError(f"{kind} needs a non-empty sequence dataset when alpha > 0")
    rng = np.random.default_rng(cfg.seed)
    params = init_params(kind, kg_train.n_entities, kg_train.n_relations, kg_train.event_ids(),
                         cfg.d, rng, cfg.concat_width, cfg.rnn_hidden)
    triples = kg_train.triples
    if len(triples) == 0:
        raise ValueError("no training triples")
    instances = build_instances(kind, sequences, cfg) if cfg.alpha > 0 else None
    stream = None
    if instances is not None and len(instances) > 0:
        stream = _Stream(len(instances), cfg.batch_seq, rng)

    result = TrainResult(params=params)
    best_params = params
    bad = 0
    if validation_hook is not None:
        result.best_metric = float(validation_hook(params))
        best_params = params.copy()

    n_batches = -(-len(triples) // cfg.batch_kg)
    step = 0
    for epoch in range(1, cfg.epochs + 1):
        perm = rng.permutation(len(triples))
        kg_sum = seq_sum = 0.0
        for b in range(n_batches):
            kg_batch = triples[perm[b * cfg.batch_kg:(b + 1) * cfg.batch_kg]]
            seq_batch = _take(kind, instances, stream.next(), cfg) if stream else None
            lb = joint_step(params, cfg, kg_batch, seq_batch, rng, step=step)
            kg_sum += lb.kg_loss
            seq_sum += lb.seq_loss
            step += 1
        record = {"epoch": epoch, "kg_loss": kg_sum, "seq_loss": seq_sum,
                  "joint": kg_sum + cfg.alpha * seq_sum, "valid_mean_rank": math.nan}
        result.epochs_run = epoch
        if validation_hook is not None and epoch % cfg.eval_interval == 0:
            metric = float(validation_hook(params))
            record["valid_mean_rank"] = metric
            if metric < result.best_metric:
                result.best_metric = metric
                result.best_epoch = epoch
                best_params = params.copy()
                bad = 0
            else:
                bad += 1
        result.history.append(record)
        if validation_hook is not None and bad >= cfg.patience:
            break

    result.params = best_params if validation_hook is not None else params
    if validation_hook is None:
        result.best_epoch = result.epochs_run
    return result
