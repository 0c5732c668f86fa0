"""TransE scoring, margin-ranking loss and uniform head/tail corruption."""

from __future__ import annotations

import numpy as np

from .params import ModelParams, SparseGrad

NORMS = ("L1", "L2")


def _norm(diff: np.ndarray, norm: str) -> np.ndarray:
    if norm == "L1":
        return np.abs(diff).sum(axis=-1)
    if norm == "L2":
        return np.sqrt((diff * diff).sum(axis=-1))
    raise ValueError(f"norm must be one of {NORMS}, got {norm!r}")


def _norm_grad(diff: np.ndarray, dist: np.ndarray, norm: str) -> np.ndarray:
    if norm == "L1":
        return np.sign(diff)
    safe = np.where(dist > 0, dist, 1.0)
    return diff / safe[:, None]


def transe_distance(params: ModelParams, triple, norm: str = "L1") -> float:
    h, r, t = (int(x) for x in triple)
    diff = params.entity_emb[h] + params.relation_emb[r] - params.entity_emb[t]
    return float(_norm(diff, norm))


def batch_distances(params: ModelParams, triples: np.ndarray, norm: str = "L1") -> np.ndarray:
    triples = np.asarray(triples).reshape(-1, 3)
    E, R = params.entity_emb, params.relation_emb
    return _norm(E[triples[:, 0]] + R[triples[:, 1]] - E[triples[:, 2]], norm)


def kg_loss_and_grad(params: ModelParams, positives: np.ndarray, negatives: np.ndarray,
                     margin: float, norm: str = "L1"):
    """Margin ranking loss ``sum [margin + d(pos) - d(neg)]_+`` and its row-sparse gradient.

    ``negatives[i]`` is the corruption paired with ``positives[i]``.
    """
    pos = np.asarray(positives).reshape(-1, 3)
    neg = np.asarray(negatives).reshape(-1, 3)
    if pos.shape != neg.shape:
        raise ValueError("positives and negatives must be aligned")
    E, R = params.entity_emb, params.relation_emb
    diff_p = E[pos[:, 0]] + R[pos[:, 1]] - E[pos[:, 2]]
    diff_n = E[neg[:, 0]] + R[neg[:, 1]] - E[neg[:, 2]]
    d_p = _norm(diff_p, norm)
    d_n = _norm(diff_n, norm)
    hinge = margin + d_p - d_n
    active = hinge > 0
    loss = float(hinge[active].sum())

    gp = _norm_grad(diff_p[active], d_p[active], norm)
    gn = _norm_grad(diff_n[active], d_n[active], norm)
    p, n = pos[active], neg[active]
    ent = SparseGrad(np.concatenate([p[:, 0], p[:, 2], n[:, 0], n[:, 2]]),
                     np.concatenate([gp, -gp, -gn, gn]))
    rel = SparseGrad(np.concatenate([p[:, 1], n[:, 1]]), np.concatenate([gp, -gn]))
    return loss, {"entity_emb": ent, "relation_emb": rel}


def negative_sample(rng: np.random.Generator, n_entities: int, positive):
    """Corrupt head or tail (probability 1/2 each) with a uniform entity != the original."""
    return tuple(corrupt_batch(rng, n_entities, np.asarray([positive]))[0].tolist())


def corrupt_batch(rng: np.random.Generator, n_entities: int, positives: np.ndarray) -> np.ndarray:
    if n_entities < 2:
        raise ValueError("corruption needs at least two entities")
    pos = np.asarray(positives).reshape(-1, 3)
    neg = pos.copy()
    col = np.where(rng.random(len(pos)) < 0.5, 0, 2)
    rows = np.arange(len(pos))
    original = pos[rows, col]
    repl = rng.integers(n_entities, size=len(pos))
    clash = repl == original
    while clash.any():
        repl[clash] = rng.integers(n_entities, size=int(clash.sum()))
        clash = repl == original
    neg[rows, col] = repl
    return neg
