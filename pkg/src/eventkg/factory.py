"""Synthetic smart-factory knowledge graph and correlated event log.

The default configuration reproduces the class sizes of the studied plant:
4 production lines, 180 equipment entities, 55 processes, 59 materials
(4 of them products), 728 event types and a 60,000-occurrence log.
"""

from __future__ import annotations

import os
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from .events import EventOccurrence, write_occurrences
from .kg import EntityClass, KnowledgeGraph, ingest_triples

RELATIONS = (
    "hasPart", "connectedTo", "follows", "involvedEquipment", "isA", "hasSource",
    "hasSkill", "hasInput", "hasOutput", "locatedIn", "producedBy",
)

EVENT_CLASSES = (
    "Alarm", "Warning", "Info", "Fault", "StatusChange", "MaterialShortage", "Maintenance",
    "OperatorMessage", "ToolChange", "QualityDeviation", "Overheat", "PressureLow",
    "Collision", "EmergencyStop", "CycleStart", "CycleEnd", "Timeout", "SafetyDoor",
    "PowerLoss", "CommunicationError",
)
DEVICE_TYPES = (
    "Conveyor", "Robot", "DrillingMachine", "WeldingUnit", "AssemblyCell", "Press",
    "Feeder", "QualityScanner", "PackagingUnit", "Buffer",
)
SKILLS = ("Drilling", "Welding", "Assembling", "Transporting", "Pressing", "Inspecting",
          "Packaging", "Feeding")
SIGNAL_TYPES = ("TemperatureSensor", "PressureSensor", "SpeedSensor", "PositionSensor",
                "CurrentSensor", "VibrationSensor", "LightBarrier", "RFIDReader")

LOG_EPOCH_MS = 1_514_764_800_000


class FactoryConfigError(ValueError):
    pass


@dataclass(frozen=True)
class FactoryConfig:
    lines: int = 4
    equipment_total: int = 180
    processes: int = 55
    materials: int = 59
    products: int = 4
    events_total: int = 728
    log_length: int = 60_000
    event_noise: float = 0.1
    seed: int = 42
    signals_total: int = 1560
    event_classes: int = 20
    burst_rounds: int = 10
    idle_ms: int = 60_000

    def validate(self) -> "FactoryConfig":
        for name in ("lines", "equipment_total", "processes", "materials", "products",
                     "events_total", "log_length", "event_classes", "burst_rounds", "idle_ms"):
            if getattr(self, name) <= 0:
                raise FactoryConfigError(f"{name} must be positive (got {getattr(self, name)})")
        if self.signals_total < 0:
            raise FactoryConfigError("signals_total must be non-negative")
        if self.equipment_total < self.lines:
            raise FactoryConfigError("equipment_total must be >= lines")
        if self.events_total < self.equipment_total:
            raise FactoryConfigError("events_total must be >= equipment_total "
                                     "(each device emits at least one event type)")
        if self.products > self.materials:
            raise FactoryConfigError("products must be <= materials (products are materials)")
        if self.products > self.processes:
            raise FactoryConfigError("products must be <= processes (one routing per product)")
        if not 0.0 <= self.event_noise <= 1.0:
            raise FactoryConfigError("event_noise must lie in [0, 1]")
        if self.event_classes > len(EVENT_CLASSES):
            raise FactoryConfigError(f"event_classes must be <= {len(EVENT_CLASSES)}")
        return self

    @classmethod
    def from_dict(cls, data: dict) -> "FactoryConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise FactoryConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class Topology:
    """Id-level structure the log simulator walks over."""

    chains: list[np.ndarray]
    device_events: dict[int, np.ndarray]
    events: np.ndarray


@dataclass
class GroundTruth:
    device_line: dict[str, int] = field(default_factory=dict)
    chains: list[list[str]] = field(default_factory=list)
    routings: list[list[str]] = field(default_factory=list)
    event_source: dict[str, str] = field(default_factory=dict)
    relation_counts: dict[str, int] = field(default_factory=dict)


@dataclass
class GeneratedWorld:
    config: FactoryConfig
    kg: KnowledgeGraph
    log: list[EventOccurrence]
    ground_truth: GroundTruth
    topology: Topology


def _build_structure(cfg: FactoryConfig, rng: np.random.Generator):
    triples: list[tuple[str, str, str]] = []
    classes: dict[str, EntityClass] = {}
    gt = GroundTruth()

    def add(h, r, t):
        triples.append((h, r, t))

    # Equipment: line -> station -> device forest, walked as one chain per line.
    L = cfg.lines
    per_line = [cfg.equipment_total // L + (1 if i < cfg.equipment_total % L else 0)
                for i in range(L)]
    leaf_devices: list[list[str]] = []
    for i, n in enumerate(per_line):
        line = f"Line{i + 1}"
        n_st = max(1, (n - 1) // 10) if n >= 3 else 0
        n_dev = n - 1 - n_st
        stations = [f"L{i + 1}.Station{k + 1}" for k in range(n_st)]
        devices = [f"L{i + 1}.Device{j + 1:02d}" for j in range(n_dev)]
        chain = [line]
        if stations:
            for st, block in zip(stations, np.array_split(np.arange(n_dev), n_st)):
                add(line, "hasPart", st)
                chain.append(st)
                for j in block.tolist():
                    add(st, "hasPart", devices[j])
                    chain.append(devices[j])
        else:
            for dev in devices:
                add(line, "hasPart", dev)
                chain.append(dev)
        for a, b in zip(chain, chain[1:]):
            add(a, "connectedTo", b)
        add(line, "isA", "ProductionLine")
        for st in stations:
            add(st, "isA", "Station")
        for dev in devices:
            add(dev, "isA", DEVICE_TYPES[int(rng.integers(len(DEVICE_TYPES)))])
        for eq in stations + devices:
            k = int(rng.integers(1, 4))
            for s in rng.choice(len(SKILLS), size=k, replace=False).tolist():
                add(eq, "hasSkill", SKILLS[s])
        for eq in chain:
            classes[eq] = EntityClass.EQUIPMENT
            gt.device_line[eq] = i
        gt.chains.append(chain)
        leaf_devices.append(devices or chain)

    # Bill of material: products are materials; each part has a primary product.
    P = cfg.products
    products = [f"Product{k + 1}" for k in range(P)]
    parts = [f"Part{j + 1:02d}" for j in range(cfg.materials - P)]
    product_parts: list[list[str]] = [[] for _ in range(P)]
    for j, part in enumerate(parts):
        product_parts[j % P].append(part)
    for k, prod in enumerate(products):
        for part in product_parts[k]:
            add(prod, "hasPart", part)
    if P > 1:
        for j, part in enumerate(parts):
            if rng.random() < 0.3:
                other = (j % P + 1 + int(rng.integers(P - 1))) % P
                add(products[other], "hasPart", part)
    for m in products + parts:
        classes[m] = EntityClass.MATERIAL

    def line_of_product(k):
        return k % L

    for k, prod in enumerate(products):
        add(prod, "producedBy", gt.chains[line_of_product(k)][0])
        for part in product_parts[k]:
            devs = leaf_devices[line_of_product(k)]
            add(part, "producedBy", devs[int(rng.integers(len(devs)))])

    # Devices consume and emit materials of the product their line makes.
    for l_idx in range(L):
        prods = [k for k in range(P) if line_of_product(k) == l_idx] or [l_idx % P]
        pool = [m for k in prods for m in (product_parts[k] or [products[k]])]
        for dev in gt.chains[l_idx][1:]:
            n_in = min(len(pool), int(rng.integers(1, 3)))
            for m in rng.choice(len(pool), size=n_in, replace=False).tolist():
                add(dev, "hasInput", pool[m])
            add(dev, "hasOutput", pool[int(rng.integers(len(pool)))])

    # Process routings: one follows-chain per product.
    proc_names = [f"Proc{p + 1:02d}" for p in range(cfg.processes)]
    for k in range(P):
        routing = [proc_names[p] for p in range(cfg.processes) if p % P == k]
        gt.routings.append(routing)
        chain = gt.chains[line_of_product(k)]
        pool = product_parts[k] or [products[k]]
        Q = len(routing)
        for q, proc in enumerate(routing):
            classes[proc] = EntityClass.PROCESS
            if q > 0:
                add(proc, "follows", routing[q - 1])
            start = (q * len(chain)) // Q
            n_eq = min(len(chain), int(rng.integers(2, 5)))
            for off in range(n_eq):
                add(proc, "involvedEquipment", chain[(start + off) % len(chain)])
            n_in = min(len(pool), int(rng.integers(1, 3)))
            for m in rng.choice(len(pool), size=n_in, replace=False).tolist():
                add(proc, "hasInput", pool[m])
            out = products[k] if q == Q - 1 else pool[int(rng.integers(len(pool)))]
            add(proc, "hasOutput", out)

    all_equipment = [eq for chain in gt.chains for eq in chain]
    n_eq = len(all_equipment)

    for s in range(cfg.signals_total):
        sig = f"Sig{s + 1:04d}"
        add(sig, "locatedIn", all_equipment[s % n_eq])
        add(sig, "isA", SIGNAL_TYPES[int(rng.integers(len(SIGNAL_TYPES)))])

    # Events: round-robin sources (every device gets >= 1), round-robin classes
    # over a shuffled order so the class does not reveal the source.
    order = rng.permutation(cfg.events_total)
    event_class = np.empty(cfg.events_total, dtype=np.int64)
    event_class[order] = np.arange(cfg.events_total) % cfg.event_classes
    events = [f"Evt{i + 1:04d}" for i in range(cfg.events_total)]
    for i, ev in enumerate(events):
        src = all_equipment[i % n_eq]
        classes[ev] = EntityClass.EVENT
        gt.event_source[ev] = src
        add(ev, "isA", EVENT_CLASSES[event_class[i]])
        add(ev, "hasSource", src)
    return triples, classes, gt, events


def generate(cfg: FactoryConfig | None = None) -> GeneratedWorld:
    """Build the factory KG and simulate its event log; a pure function of ``cfg``."""
    cfg = (cfg or FactoryConfig()).validate()
    struct_seed, log_seed = np.random.SeedSequence(cfg.seed).spawn(2)
    triples, classes, gt, event_names = _build_structure(cfg, np.random.default_rng(struct_seed))

    kg = ingest_triples(("\t".join(t) for t in triples), classes)
    missing = [r for r in RELATIONS if r not in kg.relations]
    if missing:
        kg = KnowledgeGraph(kg.entities, kg.classes, kg.relations + tuple(missing), kg.triples)
    gt.relation_counts = {r: int((kg.triples[:, 1] == kg.relation_id(r)).sum()) for r in RELATIONS}

    chains = [np.array([kg.entity_id(e) for e in chain]) for chain in gt.chains]
    device_events: dict[int, list[int]] = {}
    for ev, src in gt.event_source.items():
        device_events.setdefault(kg.entity_id(src), []).append(kg.entity_id(ev))
    topology = Topology(
        chains=chains,
        device_events={k: np.array(v) for k, v in device_events.items()},
        events=np.array([kg.entity_id(e) for e in event_names]),
    )
    log = simulate_log(topology, cfg.log_length, cfg.event_noise,
                       np.random.default_rng(log_seed), cfg.burst_rounds, cfg.idle_ms)
    return GeneratedWorld(cfg, kg, log, gt, topology)


def simulate_log(topology: Topology, length: int, noise: float, seed,
                 burst_rounds: int = 10, idle_ms: int = 60_000) -> list[EventOccurrence]:
    """Token random walk along each line's connectedTo chain.

    Lines take turns round-robin, one emission each. The token of a line sits
    at device D: with probability ``1 - noise`` it emits one of D's own event
    types, otherwise a uniformly random event type; then it advances to the
    successor (wrapping at the chain end). Timestamps advance by 1 ms per
    emission; after every ``burst_rounds`` rounds the plant idles ``idle_ms``.
    """
    if length < 1:
        raise ValueError("length must be >= 1")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    n_lines = len(topology.chains)
    noisy = rng.random(length) < noise
    random_event = topology.events[rng.integers(len(topology.events), size=length)]
    pick = rng.random(length)
    burst = burst_rounds * n_lines

    pos = [0] * n_lines
    out = []
    for t in range(length):
        line = t % n_lines
        chain = topology.chains[line]
        device = int(chain[pos[line]])
        pos[line] = (pos[line] + 1) % len(chain)
        if noisy[t]:
            ev = int(random_event[t])
        else:
            own = topology.device_events[device]
            ev = int(own[int(pick[t] * len(own))])
        out.append(EventOccurrence(LOG_EPOCH_MS + t + (t // burst) * idle_ms, ev))
    return out


def write_world(world: GeneratedWorld, out_dir) -> dict[str, str]:
    """Write triples, classes, occurrences and ground truth; returns the file map."""
    os.makedirs(out_dir, exist_ok=True)
    paths = {
        "triples": os.path.join(out_dir, "triples.tsv"),
        "classes": os.path.join(out_dir, "classes.tsv"),
        "occurrences": os.path.join(out_dir, "occurrences.csv"),
        "ground_truth": os.path.join(out_dir, "ground_truth.tsv"),
    }
    with open(paths["triples"], "w", encoding="utf-8", newline="\n") as fh:
        world.kg.write_tsv(fh)
    with open(paths["classes"], "w", encoding="utf-8", newline="\n") as fh:
        world.kg.write_classes(fh)
    write_occurrences(paths["occurrences"], world.log, world.kg)
    with open(paths["ground_truth"], "w", encoding="utf-8", newline="\n") as fh:
        for ev, src in world.ground_truth.event_source.items():
            fh.write(f"{ev}\t{src}\n")
    return paths
