"""Command-line pipelines: generate -> scenario -> train -> eval, plus sweep.

Exit codes: 0 success, 2 usage/validation error, 3 numerical failure.
Every output directory gets a deterministic ``manifest.json`` and a
``run.json`` with the non-deterministic run record (argv, wall-clock time).
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import math
import os
import sys
import time

from . import __version__
from .events import DEFAULT_GAP_MS, load_sequences
from .evaluation.grid import GridSearchError, GridSpec, grid_search
from .evaluation.ranking import POLICIES, EvaluationError, evaluate, make_validation_hook
from .evaluation.splits import (SplitError, make_link_removal_split, make_zero_shot_split,
                                read_split, write_split)
from .factory import FactoryConfig, FactoryConfigError, generate, write_world
from .kg import KGParseError, read_kg
from .models.checkpoint import load_checkpoint, save_checkpoint
from .models.params import MODEL_KINDS
from .models.trainer import TrainConfig, TrainingError, train

log = logging.getLogger("eventkg")

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 2, 3
MODE_ALIASES = {"remove-links": "link-removal", "zero-shot": "zero-shot"}


class UsageError(Exception):
    pass


def _digest_path(path) -> dict[str, str]:
    out = {}
    paths = [path]
    if os.path.isdir(path):
        paths = [os.path.join(path, f) for f in sorted(os.listdir(path))
                 if f not in ("run.json",) and os.path.isfile(os.path.join(path, f))]
    for p in paths:
        with open(p, "rb") as fh:
            out[os.path.basename(p) if os.path.isdir(path) else os.path.basename(path)] = \
                hashlib.sha256(fh.read()).hexdigest()
    return out


def _config_hash(config: dict, inputs: dict) -> str:
    blob = json.dumps({"config": config, "inputs": inputs}, sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def _write_json(path, obj) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_manifest(out_dir, command: str, config: dict, seed, inputs: dict[str, str],
                    started: float, argv) -> None:
    digests = {name: _digest_path(p) for name, p in sorted(inputs.items())}
    _write_json(os.path.join(out_dir, "manifest.json"), {
        "command": command,
        "config": config,
        "config_hash": _config_hash(config, digests),
        "seed": seed,
        "input_digests": digests,
        "tool_version": __version__,
    })
    _write_json(os.path.join(out_dir, "run.json"), {
        "argv": list(argv),
        "wall_clock_seconds": round(time.time() - started, 3),
    })


def _require_out(args) -> str:
    if not args.out:
        raise UsageError("--out is required")
    os.makedirs(args.out, exist_ok=True)
    return args.out


def cmd_generate(args, argv) -> int:
    started = time.time()
    data = {}
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            data = json.load(fh)
    if args.seed is not None:
        data["seed"] = args.seed
    try:
        cfg = FactoryConfig.from_dict(data).validate()
    except (FactoryConfigError, TypeError) as exc:
        raise UsageError(f"invalid factory config: {exc}") from None
    out = _require_out(args)
    world = generate(cfg)
    write_world(world, out)
    inputs = {"config": args.config} if args.config else {}
    _write_manifest(out, "generate", cfg.to_dict(), cfg.seed, inputs, started, argv)
    log.info("generated %d entities, %d triples, %d occurrences in %s",
             world.kg.n_entities, len(world.kg), len(world.log), out)
    return EXIT_OK


def _load_kg(path):
    if os.path.isdir(path):
        classes = os.path.join(path, "classes.tsv")
        return read_kg(os.path.join(path, "triples.tsv"), classes if os.path.exists(classes) else None)
    return read_kg(path)


def cmd_scenario(args, argv) -> int:
    started = time.time()
    mode = MODE_ALIASES[args.mode]
    seed = 0 if args.seed is None else args.seed
    kg = _load_kg(args.kg)
    try:
        if mode == "link-removal":
            if not args.relation:
                raise UsageError("--relation is required for remove-links")
            split = make_link_removal_split(kg, args.relation, args.proportion, seed)
        else:
            split = make_zero_shot_split(kg, args.proportion, seed)
    except (LookupError, SplitError) as exc:
        raise UsageError(str(exc)) from None
    out = _require_out(args)
    write_split(split, out)
    config = {"mode": mode, "relation": args.relation, "proportion": args.proportion,
              "split": split.manifest()}
    _write_manifest(out, "scenario", config, seed, {"kg": args.kg}, started, argv)
    log.info("split %s: train %d, valid %d, test %d", mode, len(split.train),
             len(split.valid), len(split.test))
    return EXIT_OK


_HYPER = {
    "dim": "d", "alpha": "alpha", "lr": "lr", "margin": "margin", "negatives": "negatives",
    "window": "window", "concat_width": "concat_width", "rnn_hidden": "rnn_hidden",
    "epochs": "epochs", "batch_kg": "batch_kg", "batch_seq": "batch_seq", "norm": "norm",
    "eval_interval": "eval_interval", "patience": "patience",
}


def _train_config(args) -> TrainConfig:
    if args.model == "transe":
        if args.alpha is not None:
            raise UsageError("--alpha has no meaning for --model transe (no sequence objective)")
        if args.sequences:
            raise UsageError("--sequences cannot be used with --model transe")
    elif not args.sequences:
        raise UsageError(f"--model {args.model} requires --sequences")
    values = {field: getattr(args, flag) for flag, field in _HYPER.items()
              if getattr(args, flag) is not None}
    if args.model == "transe":
        values["alpha"] = 0.0
    values["seed"] = 0 if args.seed is None else args.seed
    try:
        return TrainConfig(**values)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _fmt(x: float) -> str:
    return "" if isinstance(x, float) and math.isnan(x) else repr(float(x))


def cmd_train(args, argv) -> int:
    started = time.time()
    cfg = _train_config(args)
    if not os.path.isdir(args.split):
        raise UsageError(f"split directory {args.split!r} does not exist")
    if args.sequences and not os.path.exists(args.sequences):
        raise UsageError(f"sequence file {args.sequences!r} does not exist")
    split = read_split(args.split)
    seqs = load_sequences(args.sequences, split.kg, args.gap_ms) if args.sequences else None
    hook = make_validation_hook(split, args.policy, cfg.norm)
    try:
        result = train(args.model, split.train_kg(), seqs, cfg, hook)
    except TrainingError as exc:
        log.error("training failed: %s", exc)
        return EXIT_NUMERIC
    out = _require_out(args)
    history = result.history
    save_checkpoint(out, result.params, {
        "config": cfg.to_dict(), "config_hash": cfg.digest(), "model": args.model,
        "best_epoch": result.best_epoch, "best_valid_mean_rank": result.best_metric,
        "epochs_run": result.epochs_run, "validation_policy": args.policy,
        "split": split.manifest(),
    })
    with open(os.path.join(out, "history.csv"), "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["epoch", "kg_loss", "seq_loss", "joint", "valid_mean_rank"])
        for rec in history:
            w.writerow([rec["epoch"], _fmt(rec["kg_loss"]), _fmt(rec["seq_loss"]),
                        _fmt(rec["joint"]), _fmt(rec["valid_mean_rank"])])
    inputs = {"split": args.split}
    if args.sequences:
        inputs["sequences"] = args.sequences
    config = dict(cfg.to_dict(), model=args.model, gap_ms=args.gap_ms, policy=args.policy)
    _write_manifest(out, "train", config, cfg.seed, inputs, started, argv)
    log.info("%s: best valid mean rank %.2f at epoch %d (%d epochs run)", args.model,
             result.best_metric, result.best_epoch, result.epochs_run)
    return EXIT_OK


def cmd_eval(args, argv) -> int:
    started = time.time()
    params, meta = load_checkpoint(args.checkpoint)
    split = read_split(args.split)
    if (params.n_entities, params.n_relations) != (split.kg.n_entities, split.kg.n_relations):
        raise UsageError(
            f"vocabulary mismatch: checkpoint has {params.n_entities} entities / "
            f"{params.n_relations} relations, split has {split.kg.n_entities} / "
            f"{split.kg.n_relations}")
    cfg = meta.get("config", {})
    report = evaluate(params, split, args.policy, cfg.get("norm", "L1"), meta={
        "model": meta.get("model", params.kind), "config_hash": meta.get("config_hash"),
        "seed": cfg.get("seed"), "split": split.manifest(),
    })
    out = _require_out(args)
    with open(os.path.join(out, "report.json"), "w", encoding="utf-8", newline="\n") as fh:
        fh.write(report.to_json())
    with open(os.path.join(out, "report.csv"), "w", encoding="utf-8", newline="\n") as fh:
        fh.write(report.to_csv())
    _write_manifest(out, "eval", {"policy": args.policy}, cfg.get("seed"),
                    {"checkpoint": args.checkpoint, "split": args.split}, started, argv)
    log.info("filtered mean rank %.2f (%s)", report.mean_rank, args.policy)
    return EXIT_OK


SWEEP_COLUMNS = ["model", "mode", "relation", "proportion", "mean_rank", "head_mean_rank",
                 "tail_mean_rank", "queries", "best_config_hash", "status"]


def run_sweep(split_dirs, models, grid: GridSpec, sequences_path, seed: int,
              policy: str = "all-entities", gap_ms: int = DEFAULT_GAP_MS):
    """Grid-search every (model, split) pair and evaluate the winner on the test set."""
    rows, details = [], []
    for split_dir in sorted(set(split_dirs)):
        split = read_split(split_dir)
        seqs = None
        for model in models:
            if model != "transe" and seqs is None:
                seqs = load_sequences(sequences_path, split.kg, gap_ms)
            row = {"model": model, "mode": split.mode, "relation": split.target_relation,
                   "proportion": repr(float(split.proportion))}
            try:
                base = TrainConfig(seed=seed, alpha=0.0 if model == "transe" else 1.0)
                result = grid_search(split, None if model == "transe" else seqs, grid, model,
                                     base, policy)
                report = evaluate(result.best.params, split, policy, result.best_config.norm)
                cell = report.rows["ALL"]
                row.update(mean_rank=repr(cell["both"]["mean_rank"]),
                           head_mean_rank=repr(cell["head"]["mean_rank"]),
                           tail_mean_rank=repr(cell["tail"]["mean_rank"]),
                           queries=cell["both"]["queries"],
                           best_config_hash=result.best_config.digest(), status="ok")
                details.append({**row, "best_config": result.best_config.to_dict(),
                                "trials": [{"config": t.config.to_dict(),
                                            "valid_mean_rank": t.valid_mean_rank,
                                            "best_epoch": t.best_epoch,
                                            "epochs_run": t.epochs_run,
                                            "error": t.error} for t in result.trials]})
            except GridSearchError as exc:
                row.update(mean_rank="", head_mean_rank="", tail_mean_rank="", queries=0,
                           best_config_hash="", status="failed")
                details.append({**row, "error": str(exc)})
            rows.append(row)
    key = lambda r: (r["model"], r["mode"], r["relation"], float(r["proportion"]))
    order = sorted(range(len(rows)), key=lambda i: key(rows[i]))
    return [rows[i] for i in order], [details[i] for i in order]


def cmd_sweep(args, argv) -> int:
    started = time.time()
    with open(args.grid, encoding="utf-8") as fh:
        try:
            grid = GridSpec.from_dict(json.load(fh))
        except (ValueError, TypeError) as exc:
            raise UsageError(f"invalid grid spec: {exc}") from None
    for d in args.splits:
        if not os.path.isdir(d):
            raise UsageError(f"split directory {d!r} does not exist")
    models = args.models or list(MODEL_KINDS)
    if any(m != "transe" for m in models) and not args.sequences:
        raise UsageError("--sequences is required for ekl-* models")
    seed = 0 if args.seed is None else args.seed
    rows, details = run_sweep(args.splits, models, grid, args.sequences, seed, args.policy,
                              args.gap_ms)
    out = _require_out(args)
    with open(os.path.join(out, "sweep.csv"), "w", encoding="utf-8", newline="") as fh:
        w = csv.DictWriter(fh, SWEEP_COLUMNS, lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
    _write_json(os.path.join(out, "sweep.json"), details)
    inputs = {f"split:{os.path.basename(os.path.normpath(d))}": d for d in args.splits}
    if args.sequences:
        inputs["sequences"] = args.sequences
    config = {"grid": grid.to_dict(), "models": models, "policy": args.policy,
              "gap_ms": args.gap_ms}
    _write_manifest(out, "sweep", config, seed, inputs, started, argv)
    failed = [r for r in rows if r["status"] != "ok"]
    if failed:
        log.error("%d of %d sweep rows failed", len(failed), len(rows))
        return EXIT_NUMERIC
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--out", default=None, help="output directory")
    common.add_argument("--quiet", action="store_true")

    parser = argparse.ArgumentParser(prog="eventkg", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", parents=[common], help="synthetic factory world")
    p.add_argument("--config", help="JSON file of FactoryConfig fields")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("scenario", parents=[common], help="train/valid/test split")
    p.add_argument("--kg", required=True, help="world directory or triples TSV")
    p.add_argument("--mode", required=True, choices=sorted(MODE_ALIASES))
    p.add_argument("--relation")
    p.add_argument("--proportion", type=float, required=True)
    p.set_defaults(func=cmd_scenario)

    p = sub.add_parser("train", parents=[common], help="train one model")
    p.add_argument("--model", required=True, choices=MODEL_KINDS)
    p.add_argument("--split", required=True)
    p.add_argument("--sequences", help="sequence file or occurrence CSV")
    p.add_argument("--gap-ms", type=int, default=DEFAULT_GAP_MS)
    p.add_argument("--policy", choices=POLICIES, default="all-entities")
    p.add_argument("--dim", type=int)
    p.add_argument("--alpha", type=float)
    p.add_argument("--lr", type=float)
    p.add_argument("--margin", type=float)
    p.add_argument("--negatives", type=int)
    p.add_argument("--window", type=int)
    p.add_argument("--concat-width", type=int)
    p.add_argument("--rnn-hidden", type=int)
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch-kg", type=int)
    p.add_argument("--batch-seq", type=int)
    p.add_argument("--norm", choices=("L1", "L2"))
    p.add_argument("--eval-interval", type=int)
    p.add_argument("--patience", type=int)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", parents=[common], help="filtered mean rank report")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--split", required=True)
    p.add_argument("--policy", choices=POLICIES, default="all-entities")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep", parents=[common], help="grid search over many splits")
    p.add_argument("--grid", required=True, help="JSON grid spec")
    p.add_argument("--splits", nargs="+", required=True)
    p.add_argument("--sequences")
    p.add_argument("--models", nargs="+", choices=MODEL_KINDS)
    p.add_argument("--gap-ms", type=int, default=DEFAULT_GAP_MS)
    p.add_argument("--policy", choices=POLICIES, default="all-entities")
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(levelname)s %(message)s", force=True)
    try:
        return args.func(args, argv)
    except UsageError as exc:
        print(f"eventkg {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (KGParseError, EvaluationError, LookupError, FileNotFoundError) as exc:
        print(f"eventkg {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except TrainingError as exc:
        print(f"eventkg {args.command}: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
