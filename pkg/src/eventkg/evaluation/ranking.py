"""Filtered mean rank for head and tail prediction."""

from __future__ import annotations

import csv
import io
import json
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import cdist

from ..kg import KnowledgeGraph
from ..models.params import ModelParams

POLICIES = ("all-entities", "class-constrained")
_METRIC = {"L1": "cityblock", "L2": "euclidean"}


class EvaluationError(ValueError):
    pass


class KnownTriples:
    """Lookup of true heads/tails per query over a reference triple set."""

    def __init__(self, triples: np.ndarray):
        tails, heads = defaultdict(set), defaultdict(set)
        for h, r, t in np.asarray(triples).reshape(-1, 3).tolist():
            tails[(h, r)].add(t)
            heads[(r, t)].add(h)
        self.tails = {k: np.fromiter(sorted(v), dtype=np.int64) for k, v in tails.items()}
        self.heads = {k: np.fromiter(sorted(v), dtype=np.int64) for k, v in heads.items()}
        self._empty = np.zeros(0, dtype=np.int64)

    def true_tails(self, h: int, r: int) -> np.ndarray:
        return self.tails.get((h, r), self._empty)

    def true_heads(self, r: int, t: int) -> np.ndarray:
        return self.heads.get((r, t), self._empty)


def candidate_mask(kg: KnowledgeGraph, relation: int, side: str, policy: str):
    """Boolean candidate mask over entities, or ``None`` meaning every entity.

    ``class-constrained`` admits entities whose class occurs on that side of
    ``relation`` anywhere in ``kg``.
    """
    if policy == "all-entities":
        return None
    if policy != "class-constrained":
        raise ValueError(f"policy must be one of {POLICIES}")
    col = 0 if side == "head" else 2
    members = kg.triples[kg.triples[:, 1] == relation, col]
    allowed = np.unique(kg.class_codes[members])
    return np.isin(kg.class_codes, allowed)


def score_all_candidates(params: ModelParams, query, kg: KnowledgeGraph | None = None,
                         policy: str = "all-entities", norm: str = "L1"):
    """Rank candidates for ``(h, r, None)`` or ``(None, r, t)``.

    Returns ``(entity_ids, distances)`` sorted by distance ascending, ties by id.
    """
    h, r, t = query
    if (h is None) == (t is None):
        raise ValueError("exactly one of head/tail must be None")
    side = "head" if h is None else "tail"
    E, R = params.entity_emb, params.relation_emb
    q = E[t] - R[r] if side == "head" else E[h] + R[r]
    scores = cdist(q[None, :], E, _METRIC[norm])[0]
    ids = np.arange(len(E))
    if policy != "all-entities":
        if kg is None:
            raise ValueError("class-constrained policy needs the knowledge graph")
        mask = candidate_mask(kg, r, side, policy)
        ids, scores = ids[mask], scores[mask]
    order = np.lexsort((ids, scores))
    return ids[order], scores[order]


def filtered_rank(scored, true_entity: int, filter_set) -> int:
    """1-based rank of ``true_entity`` in a sorted candidate list after dropping ``filter_set``."""
    ids = scored[0]
    drop = set(int(e) for e in filter_set) - {int(true_entity)}
    rank = 0
    for e in ids.tolist():
        if e in drop:
            continue
        rank += 1
        if e == true_entity:
            return rank
    raise EvaluationError(f"true entity {true_entity} is not among the candidates")


def _side_ranks(scores: np.ndarray, targets: np.ndarray, filters, mask) -> np.ndarray:
    ids = np.arange(scores.shape[1])
    ranks = np.empty(len(targets), dtype=np.int64)
    for i, (tgt, filt) in enumerate(zip(targets.tolist(), filters)):
        row = scores[i]
        if mask is not None and not mask[tgt]:
            raise EvaluationError(f"true entity {tgt} is not among the candidates")
        s = row[tgt]
        better = (row < s) | ((row == s) & (ids < tgt))
        if mask is not None:
            better &= mask
        better[filt] = False
        ranks[i] = int(better.sum()) + 1
    return ranks


def rank_triples(params: ModelParams, triples: np.ndarray, known: KnownTriples,
                 kg: KnowledgeGraph | None = None, policy: str = "all-entities",
                 norm: str = "L1", chunk: int = 512):
    """Filtered head and tail ranks for each query triple."""
    triples = np.asarray(triples).reshape(-1, 3)
    E, R = params.entity_emb, params.relation_emb
    metric = _METRIC[norm]
    head_ranks = np.empty(len(triples), dtype=np.int64)
    tail_ranks = np.empty(len(triples), dtype=np.int64)
    masks: dict = {}

    def mask_for(r, side):
        if policy == "all-entities":
            return None
        key = (r, side)
        if key not in masks:
            masks[key] = candidate_mask(kg, r, side, policy)
        return masks[key]

    for r in np.unique(triples[:, 1]).tolist():
        sel = np.flatnonzero(triples[:, 1] == r)
        for start in range(0, len(sel), chunk):
            idx = sel[start:start + chunk]
            h, t = triples[idx, 0], triples[idx, 2]
            tail_scores = cdist(E[h] + R[r], E, metric)
            tail_ranks[idx] = _side_ranks(tail_scores, t,
                                          [known.true_tails(a, r) for a in h.tolist()],
                                          mask_for(r, "tail"))
            head_scores = cdist(E[t] - R[r], E, metric)
            head_ranks[idx] = _side_ranks(head_scores, h,
                                          [known.true_heads(r, b) for b in t.tolist()],
                                          mask_for(r, "head"))
    return head_ranks, tail_ranks


@dataclass
class RankingReport:
    """Per-relation and overall filtered mean ranks.

    ``queries`` counts ranking queries: one head and one tail query per test
    triple, so ``both`` rows hold ``2 * |test|``.
    """

    rows: dict[str, dict[str, dict]]
    policy: str
    meta: dict = field(default_factory=dict)
    head_ranks: np.ndarray | None = None
    tail_ranks: np.ndarray | None = None

    @property
    def mean_rank(self) -> float:
        return self.rows["ALL"]["both"]["mean_rank"]

    def relation_mean_rank(self, relation: str) -> float:
        return self.rows[relation]["both"]["mean_rank"]

    def to_dict(self) -> dict:
        return {"policy": self.policy, "meta": self.meta, "relations": self.rows}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["relation", "side", "mean_rank", "queries"])
        for rel in sorted(self.rows):
            for side in ("head", "tail", "both"):
                cell = self.rows[rel][side]
                w.writerow([rel, side, repr(cell["mean_rank"]), cell["queries"]])
        return buf.getvalue()


def _cell(ranks: np.ndarray) -> dict:
    return {"mean_rank": float(np.mean(ranks)), "queries": int(len(ranks))}


def build_report(kg: KnowledgeGraph, triples: np.ndarray, head_ranks, tail_ranks,
                 policy: str, meta: dict | None = None) -> RankingReport:
    rows = {}
    groups = [("ALL", np.ones(len(triples), dtype=bool))]
    groups += [(kg.relations[r], triples[:, 1] == r) for r in np.unique(triples[:, 1]).tolist()]
    for name, sel in groups:
        h, t = head_ranks[sel], tail_ranks[sel]
        rows[name] = {"head": _cell(h), "tail": _cell(t), "both": _cell(np.concatenate([h, t]))}
    return RankingReport(rows, policy, dict(meta or {}), head_ranks, tail_ranks)


def evaluate(params: ModelParams, split, policy: str = "all-entities", norm: str = "L1",
             meta: dict | None = None, part: str = "test") -> RankingReport:
    """Filtered mean rank over ``split.test`` (or ``split.valid``), filtering on all known triples."""
    if policy not in POLICIES:
        raise ValueError(f"policy must be one of {POLICIES}")
    triples = getattr(split, part)
    if len(triples) == 0:
        raise EvaluationError(f"{part} set is empty")
    known = KnownTriples(split.kg.triples)
    head, tail = rank_triples(params, triples, known, split.kg, policy, norm)
    return build_report(split.kg, triples, head, tail, policy, meta)


def make_validation_hook(split, policy: str = "all-entities", norm: str = "L1"):
    """Return ``params -> filtered mean rank on split.valid``."""
    known = KnownTriples(split.kg.triples)
    valid = split.valid
    if len(valid) == 0:
        raise EvaluationError("validation set is empty")

    def hook(params: ModelParams) -> float:
        head, tail = rank_triples(params, valid, known, split.kg, policy, norm)
        return float(np.concatenate([head, tail]).mean())

    return hook
