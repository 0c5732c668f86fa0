"""Grid search over training hyper-parameters, selected by validation mean rank."""

from __future__ import annotations

import itertools
import math
from dataclasses import asdict, dataclass, field, fields, replace

from ..events import SequenceDataset
from ..models.trainer import TrainConfig, TrainingError, TrainResult, train
from .ranking import make_validation_hook
from .splits import ScenarioSplit

# Declared enumeration order; only the fields a model kind uses are crossed.
GRID_FIELDS = ("d", "alpha", "lr", "margin", "norm", "window", "concat_width", "rnn_hidden")
_RELEVANT = {
    "transe": {"d", "lr", "margin", "norm"},
    "ekl-skip": {"d", "alpha", "lr", "margin", "norm", "window"},
    "ekl-concat": {"d", "alpha", "lr", "margin", "norm", "concat_width"},
    "ekl-rnn": {"d", "alpha", "lr", "margin", "norm", "rnn_hidden"},
}


class GridSearchError(RuntimeError):
    def __init__(self, causes: list[str]):
        super().__init__("all grid trials failed:\n" + "\n".join(causes))
        self.causes = causes


@dataclass
class GridSpec:
    d: list = field(default_factory=lambda: [20, 50, 100])
    alpha: list = field(default_factory=lambda: [0.1, 0.5, 1.0])
    lr: list = field(default_factory=lambda: [0.01, 0.1])
    margin: list = field(default_factory=lambda: [1.0, 2.0])
    norm: list = field(default_factory=lambda: ["L1"])
    window: list = field(default_factory=lambda: [5])
    concat_width: list = field(default_factory=lambda: [3])
    rnn_hidden: list = field(default_factory=lambda: [None])
    eval_interval: int = 5
    patience: int = 3

    def __post_init__(self):
        for name in GRID_FIELDS:
            if not getattr(self, name):
                raise ValueError(f"grid field {name!r} has no candidate values")

    @classmethod
    def from_dict(cls, data: dict) -> "GridSpec":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown grid keys: {sorted(unknown)}")
        return cls(**data)

    def to_dict(self) -> dict:
        return asdict(self)

    def configurations(self, kind: str, base: TrainConfig | None = None) -> list[TrainConfig]:
        """Cross product of the fields ``kind`` uses, in declared field order."""
        base = base or TrainConfig()
        base = replace(base, eval_interval=self.eval_interval, patience=self.patience)
        names = [n for n in GRID_FIELDS if n in _RELEVANT[kind]]
        return [replace(base, **dict(zip(names, combo)))
                for combo in itertools.product(*(getattr(self, n) for n in names))]


@dataclass
class Trial:
    config: TrainConfig
    valid_mean_rank: float = math.nan
    best_epoch: int = 0
    epochs_run: int = 0
    error: str | None = None


@dataclass
class GridResult:
    best_config: TrainConfig
    best: TrainResult
    trials: list[Trial]


def grid_search(split: ScenarioSplit, sequences: SequenceDataset | None, grid: GridSpec,
                kind: str, base: TrainConfig | None = None,
                policy: str = "all-entities") -> GridResult:
    """Train one model per configuration; keep the lowest validation mean rank.

    Ties go to the earliest configuration in enumeration order.
    """
    hook_cache = {}
    train_kg = split.train_kg()
    trials: list[Trial] = []
    best_idx, best_res = None, None
    for i, cfg in enumerate(grid.configurations(kind, base)):
        if cfg.norm not in hook_cache:
            hook_cache[cfg.norm] = make_validation_hook(split, policy, cfg.norm)
        try:
            res = train(kind, train_kg, sequences, cfg, hook_cache[cfg.norm])
        except (TrainingError, ValueError) as exc:
            trials.append(Trial(cfg, error=f"{type(exc).__name__}: {exc}"))
            continue
        trials.append(Trial(cfg, res.best_metric, res.best_epoch, res.epochs_run))
        if best_res is None or res.best_metric < best_res.best_metric:
            best_idx, best_res = i, res
    if best_res is None:
        raise GridSearchError([f"{t.config.digest()}: {t.error}" for t in trials])
    return GridResult(trials[best_idx].config, best_res, trials)
