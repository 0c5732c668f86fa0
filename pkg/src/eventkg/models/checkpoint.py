"""Two-file checkpoints: ``meta.json`` plus ``params.bin``.

``params.bin`` is a flat little-endian float64 array holding each present
matrix row-major, in :data:`PARAM_ORDER` order. ``meta.json`` records the
shapes needed to slice it back apart.
"""

from __future__ import annotations

import json
import os

import numpy as np

from .params import PARAM_ORDER, ModelParams

FORMAT_VERSION = 1
META_FILE = "meta.json"
DATA_FILE = "params.bin"


def save_checkpoint(out_dir, params: ModelParams, extra: dict | None = None) -> None:
    os.makedirs(out_dir, exist_ok=True)
    names = [n for n in PARAM_ORDER if n in params.arrays]
    meta = {
        "format_version": FORMAT_VERSION,
        "kind": params.kind,
        "n_entities": params.n_entities,
        "n_relations": params.n_relations,
        "dim": params.dim,
        "order": names,
        "shapes": {n: list(params.arrays[n].shape) for n in names},
        "event_ids": params.event_ids.tolist(),
    }
    meta.update(extra or {})
    flat = np.concatenate([params.arrays[n].ravel() for n in names]).astype("<f8")
    flat.tofile(os.path.join(out_dir, DATA_FILE))
    with open(os.path.join(out_dir, META_FILE), "w", encoding="utf-8", newline="\n") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_checkpoint(path) -> tuple[ModelParams, dict]:
    with open(os.path.join(path, META_FILE), encoding="utf-8") as fh:
        meta = json.load(fh)
    if meta.get("format_version") != FORMAT_VERSION:
        raise ValueError(f"unsupported checkpoint format {meta.get('format_version')!r}")
    flat = np.fromfile(os.path.join(path, DATA_FILE), dtype="<f8")
    arrays, offset = {}, 0
    for name in meta["order"]:
        shape = tuple(meta["shapes"][name])
        size = int(np.prod(shape))
        arrays[name] = flat[offset:offset + size].reshape(shape).astype(np.float64)
        offset += size
    if offset != flat.size:
        raise ValueError("checkpoint data size does not match metadata shapes")
    return ModelParams(meta["kind"], meta["event_ids"], arrays), meta
