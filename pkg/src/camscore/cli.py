"""Command-line surface: scoring, batch evaluation, training, reports.

Contract for every subcommand: machine-readable JSON on stdout, human
diagnostics on stderr only, and bit-reproducible file outputs for fixed
seeds and inputs. Exit codes: 0 ok, 1 input error, 2 model error,
3 internal error. CAMSCORE_LOG={error,info,debug} controls stderr noise.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, replace
from pathlib import Path

from . import __version__
from .aggregator import TrainConfig, load_model, save_model, train
from .bundle_io import load_bundle, save_bundle
from .errors import CamscoreError, DegenerateDataError, ModelError, SchemaError
from .scoring import DEPTH_MODES, ScoreConfig, score_pair
from .stats import (
    JUDGMENT_FORMATS,
    correlation_report,
    load_judgments,
    pairwise_accuracy,
)
from .synthetic import load_scene, random_scene, render_scene
from .types import SubScores

log = logging.getLogger("camscore")

EXIT_OK = 0
EXIT_INPUT_ERROR = 1
EXIT_MODEL_ERROR = 2
EXIT_INTERNAL_ERROR = 3

# argparse attributes that name input files, for the run manifest
_INPUT_ARGS = ("ori", "gen", "pairs", "scores", "judgments", "scene")


@dataclass(frozen=True)
class RunManifest:
    """What ran, with what configuration, on what, for how long."""

    command: str
    config: dict
    inputs: list
    output: str | None
    engine_version: str
    wall_time_s: float


def _emit(payload) -> None:
    sys.stdout.write(json.dumps(payload) + "\n")


def _score_config(args) -> ScoreConfig:
    return ScoreConfig(
        p=args.p_norm, canonical_size=args.canonical_size, depth_mode=args.depth_mode
    )


def _load_model_arg(path):
    if path is None:
        return None
    try:
        return load_model(path)
    except SchemaError as exc:
        raise ModelError(str(exc)) from exc


def _read_jsonl(path: Path):
    """Yields (line_number, parsed object) for nonempty lines."""
    with path.open() as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                doc = json.loads(line)
            except json.JSONDecodeError as exc:
                raise SchemaError(f"{path} line {lineno}: invalid JSON: {exc}") from exc
            if not isinstance(doc, dict):
                raise SchemaError(f"{path} line {lineno}: row must be a JSON object")
            yield lineno, doc


def _read_scores(path) -> dict[str, dict]:
    """Batch-output rows keyed by id; duplicates are schema errors."""
    path = Path(path)
    rows: dict[str, dict] = {}
    for lineno, doc in _read_jsonl(path):
        if "id" not in doc:
            raise SchemaError(f"{path} line {lineno}: missing field 'id'")
        row_id = str(doc["id"])
        if row_id in rows:
            raise SchemaError(f"{path} line {lineno}: duplicate id {row_id!r}")
        rows[row_id] = doc
    return rows


def _subscores_from_row(doc: dict, where: str) -> SubScores:
    values = {}
    for key in ("l_pix", "l_sem", "l_obj", "l_ciou", "l_dep"):
        if key not in doc:
            raise SchemaError(f"{where}: missing field {key!r}")
        values[key] = doc[key]
    try:
        return SubScores(**{k: float(v) for k, v in values.items()})
    except (TypeError, ValueError) as exc:
        raise SchemaError(f"{where}: {exc}") from exc


def _metric_score(doc: dict, where: str) -> float:
    if "camscore" not in doc:
        raise SchemaError(
            f"{where}: row has no 'camscore' field (run batch with --model)"
        )
    try:
        return float(doc["camscore"])
    except (TypeError, ValueError) as exc:
        raise SchemaError(f"{where}: bad camscore value {doc['camscore']!r}") from exc


def cmd_score(args) -> dict:
    cfg = _score_config(args)
    model = _load_model_arg(args.model)
    ori = load_bundle(args.ori)
    gen = load_bundle(args.gen)
    try:
        subs, cam = score_pair(ori, gen, cfg, model)
    except ValueError as exc:
        raise ModelError(f"model incompatible with input: {exc}") from exc
    payload = subs.as_dict()
    if cam is not None:
        payload["camscore"] = cam
    return payload


def _score_row_task(task) -> dict:
    """Worker for one batch row; never raises, errors are recorded in-row."""
    row_id, ori_path, gen_path, cfg, model_path = task
    try:
        model = load_model(model_path) if model_path else None
        ori = load_bundle(ori_path)
        gen = load_bundle(gen_path)
        subs, cam = score_pair(ori, gen, cfg, model)
        out = {"id": row_id, **subs.as_dict()}
        if cam is not None:
            out["camscore"] = cam
        return out
    except (CamscoreError, OSError, ValueError) as exc:
        return {"id": row_id, "error": str(exc)}


def cmd_batch(args) -> dict:
    cfg = _score_config(args)
    if args.parallelism < 1:
        raise ValueError(f"parallelism must be >= 1, got {args.parallelism}")
    _load_model_arg(args.model)  # validate once before fanning out

    pairs_path = Path(args.pairs)
    tasks = []
    for lineno, doc in _read_jsonl(pairs_path):
        for key in ("id", "ori", "gen"):
            if key not in doc:
                raise SchemaError(f"{pairs_path} line {lineno}: missing field {key!r}")
        tasks.append(
            (str(doc["id"]), str(doc["ori"]), str(doc["gen"]), cfg, args.model)
        )

    if args.parallelism == 1 or len(tasks) <= 1:
        results = [_score_row_task(t) for t in tasks]
    else:
        chunk = max(1, len(tasks) // (args.parallelism * 4))
        with ProcessPoolExecutor(max_workers=args.parallelism) as pool:
            results = list(pool.map(_score_row_task, tasks, chunksize=chunk))

    out_path = Path(args.out)
    with out_path.open("w") as fh:
        for row in results:
            fh.write(json.dumps(row) + "\n")

    errors = sum(1 for r in results if "error" in r)
    if errors:
        log.warning("batch: %d of %d rows failed", errors, len(results))
    return {"rows": len(results), "errors": errors, "out": str(out_path)}


def cmd_train(args) -> dict:
    scores = _read_scores(args.scores)
    judged = load_judgments(args.judgments, args.format)

    data = []
    for jc in judged:  # judgment file order fixes the join order
        row = scores.get(jc.instance_id)
        if row is None:
            continue
        subs = _subscores_from_row(row, f"{args.scores} id {jc.instance_id!r}")
        data.append((subs, jc.human_score))
    if len(data) < 10:
        raise DegenerateDataError(
            f"join produced {len(data)} rows; at least 10 are required"
        )

    cfg = TrainConfig(
        batch_size=args.batch_size,
        learning_rate=args.learning_rate,
        max_epochs=args.max_epochs,
        patience=args.patience,
        validation_fraction=args.validation_fraction,
    )
    model, records = train(data, cfg, seed=args.seed)

    out_path = Path(args.out)
    save_model(model, out_path)
    log_path = Path(args.train_log) if args.train_log else out_path.with_suffix(".train.csv")
    with log_path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "train_mse", "validation_tau_b", "best_epoch"])
        for rec in records:
            writer.writerow(
                [rec.epoch, repr(rec.train_mse), repr(rec.validation_tau_b), rec.best_epoch]
            )

    best_epoch = records[-1].best_epoch
    return {
        "model": str(out_path),
        "train_log": str(log_path),
        "rows": len(data),
        "epochs": len(records),
        "best_epoch": best_epoch,
        "validation_tau_b": records[best_epoch - 1].validation_tau_b,
    }


def _join_or_fail(wanted: list[str], scores: dict[str, dict], what: str) -> list[str]:
    """Returns ids missing from scores; raises when more than 5% are missing."""
    missing = [i for i in wanted if i not in scores]
    if len(missing) > 0.05 * len(wanted):
        shown = ", ".join(repr(m) for m in missing[:5])
        raise SchemaError(
            f"{len(missing)} of {len(wanted)} {what} ids have no score row "
            f"(first missing: {shown})"
        )
    if missing:
        log.warning("%d %s ids unmatched and skipped: %s", len(missing), what, missing[:10])
    return missing


def cmd_correlate(args) -> dict:
    scores = _read_scores(args.scores)
    judged = load_judgments(args.judgments, args.format)
    if not judged:
        raise DegenerateDataError(f"no judgment rows in {args.judgments}")

    ids = [jc.instance_id for jc in judged]
    missing = set(_join_or_fail(ids, scores, "judgment"))
    pairs = [
        (
            _metric_score(scores[jc.instance_id], f"{args.scores} id {jc.instance_id!r}"),
            jc.human_score,
        )
        for jc in judged
        if jc.instance_id not in missing
    ]
    report = correlation_report(pairs)
    payload = report.as_dict(dataset=args.format)
    if args.out:
        Path(args.out).write_text(json.dumps(payload, indent=2) + "\n")
    return payload


def cmd_rank_accuracy(args) -> dict:
    scores = _read_scores(args.scores)
    rows = load_judgments(args.pairs, "pairs")
    if not rows:
        raise DegenerateDataError(f"no caption pairs in {args.pairs}")

    # each pair row joins two score rows, suffixed #a and #b
    wanted = [f"{r.instance_id}#{side}" for r in rows for side in ("a", "b")]
    missing = set(_join_or_fail(wanted, scores, "caption"))
    joined = []
    for r in rows:
        key_a, key_b = f"{r.instance_id}#a", f"{r.instance_id}#b"
        if key_a in missing or key_b in missing:
            continue
        joined.append(
            replace(
                r,
                score_a=_metric_score(scores[key_a], f"{args.scores} id {key_a!r}"),
                score_b=_metric_score(scores[key_b], f"{args.scores} id {key_b!r}"),
            )
        )
    report = pairwise_accuracy(joined)
    payload = report.as_dict(dataset="pairs")
    if args.out:
        Path(args.out).write_text(json.dumps(payload, indent=2) + "\n")
    return payload


def cmd_synth(args) -> dict:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    if args.scene is not None:
        stem = Path(args.scene).stem
        if stem.endswith(".scene"):
            stem = stem[: -len(".scene")]
        specs = [(stem, load_scene(args.scene))]
    else:
        if args.random < 0:
            raise ValueError(f"--random must be >= 0, got {args.random}")
        specs = [
            (f"scene_{seed:05d}", random_scene(seed))
            for seed in range(args.seed, args.seed + args.random)
        ]

    manifests = []
    for name, spec in specs:
        bundle_dir = out_dir / name
        save_bundle(render_scene(spec), bundle_dir)
        manifests.append(str(bundle_dir / "manifest.json"))
    return {"bundles": manifests}


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="camscore",
        description="Reference-free caption evaluation over perception bundles.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_score_flags(p):
        p.add_argument("--p-norm", type=float, default=2.0, help="Minkowski exponent (>= 1)")
        p.add_argument(
            "--canonical-size", type=int, default=512, help="pixel-level comparison side"
        )
        p.add_argument("--depth-mode", choices=DEPTH_MODES, default="pairwise")

    p_score = sub.add_parser("score", help="score one bundle pair")
    p_score.add_argument("ori", help="original-image bundle directory")
    p_score.add_argument("gen", help="generated-image bundle directory")
    p_score.add_argument("--model", help="aggregator model JSON (adds 'camscore')")
    add_score_flags(p_score)
    p_score.set_defaults(func=cmd_score)

    p_batch = sub.add_parser("batch", help="score many pairs from a JSONL file")
    p_batch.add_argument("pairs", help='JSONL rows {"id","ori","gen"}')
    p_batch.add_argument("--out", required=True, help="output JSONL path")
    p_batch.add_argument("--model", help="aggregator model JSON")
    p_batch.add_argument("--parallelism", type=int, default=1, help="worker processes")
    add_score_flags(p_batch)
    p_batch.set_defaults(func=cmd_batch)

    p_train = sub.add_parser("train", help="fit the aggregator on scored judgments")
    p_train.add_argument("scores", help="batch output JSONL with sub-scores")
    p_train.add_argument("judgments", help="human judgment JSONL")
    p_train.add_argument(
        "--format", required=True, choices=[f for f in JUDGMENT_FORMATS if f != "pairs"]
    )
    p_train.add_argument("--out", required=True, help="model JSON output path")
    p_train.add_argument("--train-log", help="per-epoch CSV path (default: <out>.train.csv)")
    p_train.add_argument("--seed", type=int, default=0)
    p_train.add_argument("--batch-size", type=int, default=TrainConfig.batch_size)
    p_train.add_argument("--learning-rate", type=float, default=TrainConfig.learning_rate)
    p_train.add_argument("--max-epochs", type=int, default=TrainConfig.max_epochs)
    p_train.add_argument("--patience", type=int, default=TrainConfig.patience)
    p_train.add_argument(
        "--validation-fraction", type=float, default=TrainConfig.validation_fraction
    )
    p_train.set_defaults(func=cmd_train)

    p_corr = sub.add_parser("correlate", help="Kendall correlation against judgments")
    p_corr.add_argument("scores", help="batch output JSONL with camscore values")
    p_corr.add_argument("judgments", help="human judgment JSONL")
    p_corr.add_argument(
        "--format", required=True, choices=[f for f in JUDGMENT_FORMATS if f != "pairs"]
    )
    p_corr.add_argument("--out", help="also write the report JSON here")
    p_corr.set_defaults(func=cmd_correlate)

    p_rank = sub.add_parser("rank-accuracy", help="pairwise ranking accuracy")
    p_rank.add_argument("scores", help='batch output JSONL with ids "<pair>#a"/"<pair>#b"')
    p_rank.add_argument("pairs", help="caption-pair judgment JSONL")
    p_rank.add_argument("--out", help="also write the report JSON here")
    p_rank.set_defaults(func=cmd_rank_accuracy)

    p_synth = sub.add_parser("synth", help="render synthetic scenes to bundles")
    which = p_synth.add_mutually_exclusive_group(required=True)
    which.add_argument("--scene", help="a .scene.json file to render")
    which.add_argument("--random", type=int, help="number of random scenes")
    p_synth.add_argument("--seed", type=int, default=0, help="first random scene seed")
    p_synth.add_argument("--out", required=True, help="directory for bundle subdirectories")
    p_synth.set_defaults(func=cmd_synth)

    return parser


def _setup_logging() -> None:
    levels = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}
    wanted = os.environ.get("CAMSCORE_LOG", "info").lower()
    logging.basicConfig(
        stream=sys.stderr,
        level=levels.get(wanted, logging.INFO),
        format="%(levelname)s %(name)s: %(message)s",
    )
    if wanted not in levels:
        log.warning("unknown CAMSCORE_LOG value %r, using info", wanted)


def _log_manifest(args, t0: float) -> None:
    config = {
        k: v
        for k, v in vars(args).items()
        if k not in ("func", "command") and not callable(v)
    }
    manifest = RunManifest(
        command=args.command,
        config=config,
        inputs=[str(vars(args)[k]) for k in _INPUT_ARGS if vars(args).get(k)],
        output=str(args.out) if getattr(args, "out", None) else None,
        engine_version=__version__,
        wall_time_s=round(time.monotonic() - t0, 6),
    )
    log.info("run manifest: %s", json.dumps(asdict(manifest), default=str))


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    _setup_logging()
    t0 = time.monotonic()
    try:
        payload = args.func(args)
        _emit(payload)
        return EXIT_OK
    except ModelError as exc:
        log.error("%s", exc)
        return EXIT_MODEL_ERROR
    except (CamscoreError, OSError, ValueError) as exc:
        log.error("%s", exc)
        return EXIT_INPUT_ERROR
    except Exception:
        log.exception("internal error")
        return EXIT_INTERNAL_ERROR
    finally:
        _log_manifest(args, t0)


if __name__ == "__main__":
    sys.exit(main())
