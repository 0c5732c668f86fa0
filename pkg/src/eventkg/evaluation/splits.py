"""Scenario splits: relation link removal and zero-shot event hold-out."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np

from ..kg import KnowledgeGraph, encode_triples, read_vocab, write_vocab

VALID_FRACTION = 0.1
LINK_REMOVAL = "link-removal"
ZERO_SHOT = "zero-shot"


class SplitError(ValueError):
    pass


def round_half_up(x: float) -> int:
    return int(np.floor(x + 0.5))


@dataclass
class ScenarioSplit:
    """Disjoint train/valid/test partition of ``kg.triples`` (``(n, 3)`` id arrays)."""

    kg: KnowledgeGraph
    train: np.ndarray
    valid: np.ndarray
    test: np.ndarray
    mode: str
    target_relation: str
    proportion: float
    seed: int
    held_out: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))

    def train_kg(self) -> KnowledgeGraph:
        return self.kg.with_triples(self.train)

    def manifest(self) -> dict:
        return {
            "mode": self.mode,
            "relation": self.target_relation,
            "proportion": self.proportion,
            "seed": self.seed,
            "counts": {"train": len(self.train), "valid": len(self.valid),
                       "test": len(self.test), "total": len(self.kg)},
            "validation_drawn": "after test removal, from non-test triples",
            "valid_fraction": VALID_FRACTION,
            "held_out_entities": [self.kg.entities[e] for e in self.held_out.tolist()],
        }


def _partition(kg: KnowledgeGraph, test_mask: np.ndarray, rng: np.random.Generator, **kw):
    remaining = np.flatnonzero(~test_mask)
    n_valid = min(round_half_up(VALID_FRACTION * len(kg)), len(remaining))
    valid_idx = np.sort(rng.choice(remaining, size=n_valid, replace=False))
    valid_mask = np.zeros(len(kg), dtype=bool)
    valid_mask[valid_idx] = True
    train_mask = ~test_mask & ~valid_mask
    T = kg.triples
    return ScenarioSplit(kg=kg, train=T[train_mask], valid=T[valid_mask], test=T[test_mask], **kw)


def make_link_removal_split(kg: KnowledgeGraph, relation, proportion: float,
                            seed: int) -> ScenarioSplit:
    """Hold out ``round(proportion * n_r)`` triples of one relation as the test set."""
    if not 0 < proportion < 1:
        raise SplitError("proportion must lie in (0, 1)")
    rid = kg.relation_id(relation)
    rel_idx = np.flatnonzero(kg.triples[:, 1] == rid)
    if len(rel_idx) == 0:
        raise SplitError(f"relation {kg.relations[rid]!r} has no triples")
    rng = np.random.default_rng(seed)
    n_test = round_half_up(proportion * len(rel_idx))
    test_mask = np.zeros(len(kg), dtype=bool)
    test_mask[rng.choice(rel_idx, size=n_test, replace=False)] = True
    return _partition(kg, test_mask, rng, mode=LINK_REMOVAL,
                      target_relation=kg.relations[rid], proportion=proportion, seed=seed)


def make_zero_shot_split(kg: KnowledgeGraph, event_fraction: float, seed: int) -> ScenarioSplit:
    """Hold out a fraction of event entities together with every triple they occur in."""
    if not 0 < event_fraction < 1:
        raise SplitError("event_fraction must lie in (0, 1)")
    events = kg.event_ids()
    if len(events) == 0:
        raise SplitError("graph has no Event-class entities")
    rng = np.random.default_rng(seed)
    n_sel = round_half_up(event_fraction * len(events))
    held = np.sort(rng.choice(events, size=n_sel, replace=False))
    T = kg.triples
    test_mask = np.isin(T[:, 0], held) | np.isin(T[:, 2], held)
    return _partition(kg, test_mask, rng, mode=ZERO_SHOT, target_relation="all",
                      proportion=event_fraction, seed=seed, held_out=held)


SPLIT_FILES = ("train.tsv", "valid.tsv", "test.tsv")


def write_split(split: ScenarioSplit, out_dir) -> None:
    os.makedirs(out_dir, exist_ok=True)
    for name, part in zip(SPLIT_FILES, (split.train, split.valid, split.test)):
        with open(os.path.join(out_dir, name), "w", encoding="utf-8", newline="\n") as fh:
            split.kg.write_tsv(fh, part)
    write_vocab(split.kg, os.path.join(out_dir, "entities.tsv"),
                os.path.join(out_dir, "relations.tsv"))
    with open(os.path.join(out_dir, "split.json"), "w", encoding="utf-8", newline="\n") as fh:
        json.dump(split.manifest(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_split(split_dir) -> ScenarioSplit:
    names, classes, relations = read_vocab(os.path.join(split_dir, "entities.tsv"),
                                           os.path.join(split_dir, "relations.tsv"))
    vocab = KnowledgeGraph(names, classes, relations, np.zeros((0, 3), dtype=np.int64))
    parts = []
    for fname in SPLIT_FILES:
        with open(os.path.join(split_dir, fname), encoding="utf-8") as fh:
            parts.append(encode_triples(vocab, fh))
    with open(os.path.join(split_dir, "split.json"), encoding="utf-8") as fh:
        meta = json.load(fh)
    kg = vocab.with_triples(np.concatenate(parts))
    held = np.array([kg.entity_id(n) for n in meta.get("held_out_entities", [])], dtype=np.int64)
    return ScenarioSplit(kg=kg, train=parts[0], valid=parts[1], test=parts[2],
                         mode=meta["mode"], target_relation=meta["relation"],
                         proportion=meta["proportion"], seed=meta["seed"], held_out=held)
