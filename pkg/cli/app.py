"""Command-line entry point.

Every subcommand resolves one validated run config (flag > ``--config`` JSON
file > default), does its work, and stamps the config hash into every
artifact it writes. Errors are reported on stderr with a category and map to
distinct exit codes: 2 usage, 3 invalid input or config, 4 I/O, 5 data.
"""

import argparse
import csv
import os
import sys
from typing import Any, Dict, Iterable, List, Optional, Sequence, Type

from config.settings import (
    CadConfig,
    EvalConfig,
    OcclusionConfig,
    SceneConfig,
    ScheduleSettings,
    TrainConfig,
    TripletConfig,
    default_threads,
    load_config_file,
    resolve_config,
)
from core.curriculum import CurriculumSchedule, iterations_per_epoch, mixing_ratio, outdoor_count
from core.evaluation import evaluate_triplets, export_features, load_templates, retrieve, write_features_csv
from core.experiments.ablation import compare_modes, mode_means, ratio_correlation, sweep_max_ratio
from core.learning import load_encoder, make_provider, train, write_metrics_csv
from core.occlusion import augment_triplets
from core.triplets import read_dataset, read_manifest, write_dataset
from core.triplets.adapter import CAPTIONS_DIRNAME, SimulatedSceneAdapter
from core.triplets.captions import write_template_captions
from core.triplets.pipeline import generate_from_adapter
from environment.cad_library import generate_synthetic_triplets
from environment.scene_io import write_scene
from environment.simulator import generate_scene
from utils.errors import EXIT_IO, ConfigError, MixAlignError
from utils.hashing import config_hash
from utils.logger import configure_logging, get_logger

logger = get_logger(__name__)

SCHEDULE_KEYS = ("warmup_epochs", "total_epochs", "max_ratio", "coverage", "batch_size", "devices")


def _int_list(text: str) -> List[int]:
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _float_list(text: str) -> List[float]:
    try:
        return [float(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _str_list(text: str) -> List[str]:
    return [part.strip() for part in text.split(",") if part.strip()]


def _resolve(model: Type, args: argparse.Namespace, section: str, extra_file_values: Optional[Dict[str, Any]] = None):
    file_values = dict(extra_file_values or {})
    file_values.update(load_config_file(args.config, section))
    flags = {name: getattr(args, name) for name in model.model_fields if hasattr(args, name)}
    provider_path = getattr(args, "provider_path", None)
    if provider_path is not None and "provider" in model.model_fields:
        provider = dict(file_values.get("provider") or {})
        provider["path"] = provider_path
        file_values["provider"] = provider
    return resolve_config(model, file_values, flags)


def _require(config: Any, *names: str) -> None:
    missing = [name for name in names if getattr(config, name) is None]
    if missing:
        raise ConfigError("required setting missing", missing)


def _write_csv(path: Optional[str], header: Sequence[str], rows: Iterable[Sequence[Any]]) -> None:
    if path is None:
        writer = csv.writer(sys.stdout, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
        sys.stdout.flush()
        return
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(header)
        writer.writerows(rows)


def cmd_simulate_scene(args: argparse.Namespace) -> None:
    config = _resolve(SceneConfig, args, "scene")
    _require(config, "out")
    digest = config_hash(config)
    result = generate_scene(config)
    write_scene(result.scene, config.out, result.truth_to_dict(), digest)
    write_template_captions(result.scene, os.path.join(config.out, CAPTIONS_DIRNAME), config.min_visibility)
    logger.info("scene simulated", extra={"fields": {"out": config.out, "config_hash": digest}})


def cmd_simulate_cad(args: argparse.Namespace) -> None:
    config = _resolve(CadConfig, args, "cad")
    _require(config, "out")
    digest = config_hash(config)
    write_dataset(generate_synthetic_triplets(config), config.out, "synthetic", digest)


def cmd_gen_triplets(args: argparse.Namespace) -> None:
    config = _resolve(TripletConfig, args, "triplets")
    _require(config, "scene", "out")
    digest = config_hash(config)
    adapter = SimulatedSceneAdapter([config.scene], config.captions)
    triplets, stats = generate_from_adapter(adapter, config, default_threads(config.threads))
    write_dataset(triplets, config.out, config.dataset_name, digest)
    logger.info("triplet generation finished", extra={"fields": dict(stats.as_dict(), config_hash=digest)})


def cmd_hpr_augment(args: argparse.Namespace) -> None:
    config = _resolve(OcclusionConfig, args, "occlusion")
    _require(config, "input", "out")
    digest = config_hash(config)
    source = read_manifest(config.input)
    augmented = augment_triplets(read_dataset(config.input), config)
    write_dataset(augmented, config.out, f"{source.name}-occluded", digest)


def cmd_schedule(args: argparse.Namespace) -> None:
    config = _resolve(ScheduleSettings, args, "schedule")
    digest = config_hash(config)
    schedule = CurriculumSchedule(**config.model_dump(exclude={"out", "plot"}))
    iterations = iterations_per_epoch(schedule)
    ratios = [(epoch, mixing_ratio(epoch, schedule)) for epoch in range(schedule.total_epochs + 1)]
    _write_csv(
        config.out,
        ("epoch", "ratio", "outdoor_per_batch", "iterations", "config_hash"),
        ((e, repr(r), outdoor_count(r, schedule.batch_size), iterations, digest) for e, r in ratios),
    )
    if config.plot:
        from visualization.schedule_plot import plot_mixing_schedule

        plot_mixing_schedule(ratios, config.plot, schedule.batch_size)


def _schedule_file_values(path: Optional[str]) -> Dict[str, Any]:
    values = load_config_file(path, "schedule")
    return {key: values[key] for key in SCHEDULE_KEYS if key in values}


def cmd_train(args: argparse.Namespace) -> None:
    config = _resolve(TrainConfig, args, "train", _schedule_file_values(args.schedule))
    _require(config, "synthetic")
    synthetic = read_dataset(config.synthetic)
    outdoor = read_dataset(config.outdoor) if config.outdoor else []
    learner = train(config, synthetic, outdoor)
    if config.metrics_out:
        write_metrics_csv(learner.history, config.metrics_out)
    else:
        _write_csv(None, list(learner.history[0].as_row()) if learner.history else [],
                   (list(row.as_row().values()) for row in learner.history))
    if config.params_out:
        learner.save_model(config.params_out)
    if config.plot:
        from visualization.training_plot import plot_training_curves

        plot_training_curves(learner.history, config.plot)


def cmd_eval(args: argparse.Namespace) -> None:
    config = _resolve(EvalConfig, args, "eval")
    _require(config, "dataset", "params")
    digest = config_hash(config)
    triplets = read_dataset(config.dataset)
    encoder, _ = load_encoder(config.params)
    provider = make_provider(config.provider, encoder.embed_dim)
    templates = load_templates(config.prompts, config.prompt_set)
    rows = evaluate_triplets(
        triplets, encoder, provider, templates, config.topk, config.mode, config.min_points, config.holdout
    )
    _write_csv(
        config.out,
        ("split", "metric", "k", "value", "config_hash"),
        ((r.split, r.metric, r.k, repr(r.value), digest) for r in rows),
    )
    if config.features_out or config.retrieve:
        table = export_features(triplets, encoder, config.min_points)
        if config.features_out:
            write_features_csv(table, config.features_out, encoder.embed_dim, digest)
        if config.retrieve:
            hits = retrieve(config.retrieve, table, provider, config.top)
            _write_csv(None, ("rank", "instance_id", "label", "score"),
                       ((i + 1, inst, label, repr(score)) for i, (inst, label, score) in enumerate(hits)))


def cmd_ablate(args: argparse.Namespace) -> None:
    config = _resolve(TrainConfig, args, "train")
    _require(config, "synthetic", "outdoor")
    digest = config_hash(config)
    synthetic = read_dataset(config.synthetic)
    outdoor = read_dataset(config.outdoor)
    if args.study == "modes":
        rows = compare_modes(config, synthetic, outdoor, args.seeds)
        logger.info("mode comparison", extra={"fields": {"means": mode_means(rows), "config_hash": digest}})
    else:
        rows = sweep_max_ratio(config, synthetic, outdoor, args.ratios, args.seeds)
        logger.info("ratio sweep", extra={"fields": {"spearman": ratio_correlation(rows), "config_hash": digest}})
    header = list(rows[0].as_row()) + ["config_hash"] if rows else ["config_hash"]
    _write_csv(args.out, header, (list(r.as_row().values()) + [digest] for r in rows))


def _common_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file; flags override its values")
    common.add_argument("--threads", type=int, help="worker-pool size (default: $MIXALIGN_THREADS or 1)")
    common.add_argument("--log-level", default="INFO", help="DEBUG, INFO, WARNING or ERROR")
    common.add_argument("--log-file", help="also write JSON log lines to this file")
    return common


def _add_training_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--synthetic", help="synthetic-domain dataset directory")
    p.add_argument("--outdoor", help="outdoor-domain dataset directory")
    p.add_argument("--seed", type=int)
    p.add_argument("--we", dest="warmup_epochs", type=int, help="warm-up epochs")
    p.add_argument("--te", dest="total_epochs", type=int, help="total epochs")
    p.add_argument("--rmax", dest="max_ratio", type=float, help="final outdoor ratio")
    p.add_argument("--psi", dest="coverage", type=float, help="per-epoch synthetic coverage")
    p.add_argument("--batch", dest="batch_size", type=int)
    p.add_argument("--devices", type=int)
    p.add_argument("--temperature", type=float)
    p.add_argument("--lr", dest="learning_rate", type=float)
    p.add_argument("--weight-decay", type=float)
    p.add_argument("--max-points", type=int)
    p.add_argument("--eval-fraction", type=float)
    p.add_argument("--exclude-classes", type=_str_list, help="comma-separated classes kept out of training")
    p.add_argument("--occlusion", action="store_true", default=None, help="occlude synthetic clouds on the fly")
    p.add_argument("--provider-file", dest="provider_path", help="embedding provider file")


def build_parser() -> argparse.ArgumentParser:
    common = _common_parser()
    parser = argparse.ArgumentParser(prog="mixalign", description="Mixed-domain point/image/text alignment toolkit.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate-scene", parents=[common], help="simulate a driving scene with captions")
    p.add_argument("--seed", type=int)
    p.add_argument("--num-objects", type=int)
    p.add_argument("--num-sweeps", type=int)
    p.add_argument("--noise-sigma", type=float)
    p.add_argument("--ego-speed", type=float)
    p.add_argument("--out", help="scene directory")
    p.set_defaults(handler=cmd_simulate_scene)

    p = sub.add_parser("simulate-cad", parents=[common], help="build the synthetic-domain triplet library")
    p.add_argument("--seed", type=int)
    p.add_argument("--objects-per-class", type=int)
    p.add_argument("--points", type=int)
    p.add_argument("--views-per-object", type=int)
    p.add_argument("--up-axis", choices=("y", "z"), help="authoring up axis of the models (default: y)")
    p.add_argument("--out", help="dataset directory")
    p.set_defaults(handler=cmd_simulate_cad)

    p = sub.add_parser("gen-triplets", parents=[common], help="fuse, crop and caption outdoor triplets")
    p.add_argument("--scene", help="scene directory")
    p.add_argument("--captions", help="caption directory (default: <scene>/captions)")
    p.add_argument("--sweeps", type=int)
    p.add_argument("--min-points", type=int)
    p.add_argument("--visibility", type=float)
    p.add_argument("--max-offset", type=float, help="max seconds between crop and reference time")
    p.add_argument("--no-motion-compensation", dest="compensate_motion", action="store_false", default=None)
    p.add_argument("--range-filter", action="store_true", default=None)
    p.add_argument("--store-pixels", action="store_true", default=None)
    p.add_argument("--out", help="dataset directory")
    p.set_defaults(handler=cmd_gen_triplets)

    p = sub.add_parser("hpr-augment", parents=[common], help="occlude synthetic triplets from random viewpoints")
    p.add_argument("--in", dest="input", help="input dataset directory")
    p.add_argument("--out", help="output dataset directory")
    p.add_argument("--gamma", type=float)
    p.add_argument("--rmin", dest="r_min", type=float)
    p.add_argument("--rmax", dest="r_max", type=float)
    p.add_argument("--seed", type=int)
    p.set_defaults(handler=cmd_hpr_augment)

    p = sub.add_parser("schedule", parents=[common], help="dump the mixing ratio per epoch as CSV")
    p.add_argument("--we", dest="warmup_epochs", type=int)
    p.add_argument("--te", dest="total_epochs", type=int)
    p.add_argument("--rmax", dest="max_ratio", type=float)
    p.add_argument("--psi", dest="coverage", type=float)
    p.add_argument("--ncad", dest="synthetic_size", type=int)
    p.add_argument("--batch", dest="batch_size", type=int)
    p.add_argument("--devices", type=int)
    p.add_argument("--out", help="CSV path (default: stdout)")
    p.add_argument("--plot", help="also save a schedule plot")
    p.set_defaults(handler=cmd_schedule)

    p = sub.add_parser("train", parents=[common], help="contrastive training")
    _add_training_flags(p)
    p.add_argument("--schedule", help="JSON file with schedule settings")
    p.add_argument("--mode", choices=("curriculum", "static", "two-step", "synthetic-only"))
    p.add_argument("--static-ratio", type=float)
    p.add_argument("--switch-epoch", type=int)
    p.add_argument("--progress", action="store_true", default=None)
    p.add_argument("--metrics-out", help="metrics CSV (default: stdout)")
    p.add_argument("--params-out", help="encoder parameter file")
    p.add_argument("--plot", help="also save training curves")
    p.set_defaults(handler=cmd_train)

    p = sub.add_parser("eval", parents=[common], help="zero-shot evaluation")
    p.add_argument("--dataset")
    p.add_argument("--params")
    p.add_argument("--prompts", help="template file, one '{}' template per line")
    p.add_argument("--prompt-set", choices=("single", "full"))
    p.add_argument("--topk", type=_int_list)
    p.add_argument("--mode", choices=("object", "class", "both"))
    p.add_argument("--holdout", type=_str_list, help="comma-separated unseen classes")
    p.add_argument("--min-points", type=int)
    p.add_argument("--retrieve", help="text prompt for retrieval")
    p.add_argument("--top", type=int)
    p.add_argument("--features-out")
    p.add_argument("--provider-file", dest="provider_path")
    p.add_argument("--out", help="results CSV (default: stdout)")
    p.set_defaults(handler=cmd_eval)

    p = sub.add_parser("ablate", parents=[common], help="compare mixing modes or sweep r_max")
    _add_training_flags(p)
    p.add_argument("--study", choices=("modes", "ratio"), default="modes")
    p.add_argument("--seeds", type=_int_list, default=[0, 1, 2, 3, 4])
    p.add_argument("--ratios", type=_float_list, default=[0.1, 0.2, 0.3, 0.4, 0.5])
    p.add_argument("--out", help="results CSV (default: stdout)")
    p.set_defaults(handler=cmd_ablate)
    return parser


def run(argv: Optional[Sequence[str]] = None) -> int:
    """
    Parse ``argv``, run the subcommand and return the process exit code.

    Args:
        argv: Arguments without the program name; ``sys.argv[1:]`` when None.
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        configure_logging(args.log_level, args.log_file)
        args.handler(args)
    except MixAlignError as e:
        logger.error("command failed", extra={"fields": {"command": args.command, "category": e.category}})
        print(f"mixalign {args.command}: {e.category} error: {e}", file=sys.stderr)
        return e.exit_code
    except OSError as e:
        logger.error("command failed", extra={"fields": {"command": args.command, "category": "io"}})
        print(f"mixalign {args.command}: io error: {e}", file=sys.stderr)
        return EXIT_IO
    return 0


__all__ = ["build_parser", "run"]
