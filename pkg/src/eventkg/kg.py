"""Knowledge graph data model: interned vocabularies, triple files, degree statistics."""

from __future__ import annotations

import io
from collections.abc import Iterable, Mapping
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple, TextIO

import numpy as np


class EntityClass(str, Enum):
    EQUIPMENT = "Equipment"
    PROCESS = "Process"
    MATERIAL = "Material"
    EVENT = "Event"
    OTHER = "Other"


CLASS_ORDER = tuple(EntityClass)
_CLASS_CODE = {c: i for i, c in enumerate(CLASS_ORDER)}


class KGParseError(ValueError):
    """Raised for malformed triple or class files; carries the 1-based line number."""

    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


class Triple(NamedTuple):
    head: int
    relation: int
    tail: int


class KnowledgeGraph:
    """Immutable triple set over interned entity and relation vocabularies.

    Triples are held as a read-only ``(n, 3)`` int64 array of
    ``(head, relation, tail)`` ids in ingestion order.
    """

    def __init__(self, entities, classes, relations, triples, duplicates=0):
        self.entities: tuple[str, ...] = tuple(entities)
        self.relations: tuple[str, ...] = tuple(relations)
        self.classes: tuple[EntityClass, ...] = tuple(EntityClass(c) for c in classes)
        if len(self.classes) != len(self.entities):
            raise ValueError("one class tag per entity required")
        arr = np.asarray(triples, dtype=np.int64).reshape(-1, 3)
        arr = np.array(arr, copy=True)
        arr.setflags(write=False)
        self.triples = arr
        self.duplicates = duplicates
        self._entity_index = {name: i for i, name in enumerate(self.entities)}
        self._relation_index = {name: i for i, name in enumerate(self.relations)}
        if len(self._entity_index) != len(self.entities):
            raise ValueError("duplicate entity names")
        if len(self._relation_index) != len(self.relations):
            raise ValueError("duplicate relation names")
        if len(arr):
            if arr[:, [0, 2]].min() < 0 or arr[:, [0, 2]].max() >= len(self.entities):
                raise ValueError("triple references an unknown entity id")
            if arr[:, 1].min() < 0 or arr[:, 1].max() >= len(self.relations):
                raise ValueError("triple references an unknown relation id")
        codes = np.array([_CLASS_CODE[c] for c in self.classes], dtype=np.int8)
        codes.setflags(write=False)
        self.class_codes = codes

    @property
    def n_entities(self) -> int:
        return len(self.entities)

    @property
    def n_relations(self) -> int:
        return len(self.relations)

    def __len__(self) -> int:
        return len(self.triples)

    def __iter__(self):
        for h, r, t in self.triples.tolist():
            yield Triple(h, r, t)

    def __repr__(self):
        return (f"KnowledgeGraph(entities={self.n_entities}, relations={self.n_relations}, "
                f"triples={len(self)})")

    def entity_id(self, name: str) -> int:
        try:
            return self._entity_index[name]
        except KeyError:
            raise LookupError(f"unknown entity {name!r}") from None

    def relation_id(self, name: str | int) -> int:
        if isinstance(name, (int, np.integer)):
            if not 0 <= name < self.n_relations:
                raise LookupError(f"relation id {name} out of range")
            return int(name)
        try:
            return self._relation_index[name]
        except KeyError:
            raise LookupError(f"unknown relation {name!r}") from None

    def entities_of_class(self, cls: EntityClass | str) -> np.ndarray:
        return np.flatnonzero(self.class_codes == _CLASS_CODE[EntityClass(cls)])

    def event_ids(self) -> np.ndarray:
        return self.entities_of_class(EntityClass.EVENT)

    def with_triples(self, triples) -> "KnowledgeGraph":
        """Same vocabularies, different triple set (used for splits)."""
        return KnowledgeGraph(self.entities, self.classes, self.relations, triples)

    def name_triples(self, triples=None) -> list[tuple[str, str, str]]:
        arr = self.triples if triples is None else np.asarray(triples).reshape(-1, 3)
        return [(self.entities[h], self.relations[r], self.entities[t]) for h, r, t in arr.tolist()]

    def write_tsv(self, stream: TextIO, triples=None) -> None:
        for h, r, t in self.name_triples(triples):
            stream.write(f"{h}\t{r}\t{t}\n")

    def write_classes(self, stream: TextIO) -> None:
        for name, cls in zip(self.entities, self.classes):
            stream.write(f"{name}\t{cls.value}\n")

    def to_tsv(self) -> str:
        buf = io.StringIO()
        self.write_tsv(buf)
        return buf.getvalue()


def _lines(source) -> Iterable[str]:
    if isinstance(source, str):
        return io.StringIO(source)
    return source


def ingest_triples(source, class_map: Mapping[str, str] | None = None,
                   relations: Iterable[str] = ()) -> KnowledgeGraph:
    """Parse a ``head<TAB>relation<TAB>tail`` stream into a KnowledgeGraph.

    ``source`` is a text stream, an iterable of lines, or a string. Ids are
    assigned in order of first appearance; repeated triples are collapsed and
    counted in ``KnowledgeGraph.duplicates``. Entities missing from
    ``class_map`` are tagged ``Other``. ``relations`` optionally pre-seeds the
    relation vocabulary.
    """
    class_map = class_map or {}
    entities: dict[str, int] = {}
    rel_index: dict[str, int] = {name: i for i, name in enumerate(relations)}
    seen: set[tuple[int, int, int]] = set()
    triples: list[tuple[int, int, int]] = []
    duplicates = 0

    for lineno, raw in enumerate(_lines(source), start=1):
        line = raw.rstrip("\n").rstrip("\r")
        if not line or line.startswith("#"):
            continue
        fields = line.split("\t")
        if len(fields) != 3:
            raise KGParseError(lineno, f"expected 3 tab-separated fields, got {len(fields)}")
        h, r, t = fields
        if not h or not r or not t:
            raise KGParseError(lineno, "empty entity or relation name")
        hid = entities.setdefault(h, len(entities))
        rid = rel_index.setdefault(r, len(rel_index))
        tid = entities.setdefault(t, len(entities))
        key = (hid, rid, tid)
        if key in seen:
            duplicates += 1
            continue
        seen.add(key)
        triples.append(key)

    names = list(entities)
    classes = [class_map.get(name, EntityClass.OTHER) for name in names]
    return KnowledgeGraph(names, classes, list(rel_index), triples, duplicates=duplicates)


def read_class_file(source) -> dict[str, EntityClass]:
    """Parse ``entity<TAB>class`` lines."""
    out: dict[str, EntityClass] = {}
    for lineno, raw in enumerate(_lines(source), start=1):
        line = raw.rstrip("\n").rstrip("\r")
        if not line or line.startswith("#"):
            continue
        fields = line.split("\t")
        if len(fields) != 2 or not fields[0]:
            raise KGParseError(lineno, "expected 'entity<TAB>class'")
        try:
            out[fields[0]] = EntityClass(fields[1])
        except ValueError:
            raise KGParseError(lineno, f"unknown class {fields[1]!r}") from None
    return out


@dataclass(frozen=True)
class DegreeStats:
    count: int
    avg_in: float
    avg_out: float


def degree_stats(kg: KnowledgeGraph) -> dict[EntityClass, DegreeStats]:
    """Per-class entity count and mean in/out triple degree."""
    n = kg.n_entities
    out_deg = np.bincount(kg.triples[:, 0], minlength=n)
    in_deg = np.bincount(kg.triples[:, 2], minlength=n)
    stats = {}
    for cls in CLASS_ORDER:
        members = kg.entities_of_class(cls)
        if len(members) == 0:
            stats[cls] = DegreeStats(0, 0.0, 0.0)
        else:
            stats[cls] = DegreeStats(len(members), float(in_deg[members].mean()),
                                     float(out_deg[members].mean()))
    return stats


def triples_of_relation(kg: KnowledgeGraph, relation: int | str) -> list[Triple]:
    rid = kg.relation_id(relation)
    sel = kg.triples[kg.triples[:, 1] == rid]
    return [Triple(*row) for row in sel.tolist()]


def read_kg(triples_path, classes_path=None) -> KnowledgeGraph:
    class_map = None
    if classes_path is not None:
        with open(classes_path, encoding="utf-8") as fh:
            class_map = read_class_file(fh)
    with open(triples_path, encoding="utf-8") as fh:
        return ingest_triples(fh, class_map)


def write_vocab(kg: KnowledgeGraph, entities_path, relations_path) -> None:
    """Persist vocabularies in id order so ids survive a split/train/eval pipeline."""
    with open(entities_path, "w", encoding="utf-8", newline="\n") as fh:
        kg.write_classes(fh)
    with open(relations_path, "w", encoding="utf-8", newline="\n") as fh:
        for name in kg.relations:
            fh.write(name + "\n")


def read_vocab(entities_path, relations_path):
    with open(entities_path, encoding="utf-8") as fh:
        class_map = read_class_file(fh)
    with open(relations_path, encoding="utf-8") as fh:
        relations = [line.rstrip("\n") for line in fh if line.strip()]
    return list(class_map), list(class_map.values()), relations


def encode_triples(kg: KnowledgeGraph, source) -> np.ndarray:
    """Map a triple stream onto ``kg``'s existing vocabulary (no new ids)."""
    rows = []
    for lineno, raw in enumerate(_lines(source), start=1):
        line = raw.rstrip("\n").rstrip("\r")
        if not line or line.startswith("#"):
            continue
        fields = line.split("\t")
        if len(fields) != 3:
            raise KGParseError(lineno, f"expected 3 tab-separated fields, got {len(fields)}")
        h, r, t = fields
        rows.append((kg.entity_id(h), kg.relation_id(r), kg.entity_id(t)))
    return np.asarray(rows, dtype=np.int64).reshape(-1, 3)
