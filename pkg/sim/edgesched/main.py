from __future__ import annotations

import argparse
import json
import logging
import sys
from collections.abc import Sequence
from pathlib import Path

from .core.config import Settings, settings
from .core.errors import EdgeSchedError, ScenarioError
from .core.logging import configure_logging
from .schemas.scenario import ScenarioConfig, SchedulerName
from .services.harness import oracle_report, run_scenario, run_sweep, trend_summary
from .services.jobgraph import parse_job_config
from .services.scenarios import load_scenario, load_sweep, materialise
from .services.topology import load_network
from .utils.reporting import render_metrics_csv, write_json, write_metrics_csv

logger = logging.getLogger(__name__)


def _add_output_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--out", type=Path, help="output directory")
    parser.add_argument(
        "--timing",
        action="store_true",
        help="record wall-clock runtime (breaks byte-identical output)",
    )


def create_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="edgesched",
        description="Online DAG job scheduling over collaborative edge networks.",
    )
    parser.add_argument("--log-level", help="diagnostic log level (default WARNING)")
    commands = parser.add_subparsers(dest="command", required=True)

    run = commands.add_parser("run", help="simulate one scenario")
    run.add_argument("scenario", type=Path)
    run.add_argument("--seed", type=int)
    run.add_argument("--scheduler", choices=[name.value for name in SchedulerName])
    run.add_argument("--k-paths", type=int, dest="k_paths")
    run.add_argument("--format", choices=["csv", "json"], default="csv")
    run.add_argument(
        "--log-events", action="store_true", help="write the JSON-lines event log"
    )
    run.add_argument(
        "--policy",
        action="store_true",
        help="write the placement, routes and rates each job last ran with",
    )
    _add_output_flags(run)

    sweep = commands.add_parser("sweep", help="vary one axis across seeds")
    sweep.add_argument("sweep", type=Path)
    sweep.add_argument("--workers", type=int)
    _add_output_flags(sweep)

    oracle = commands.add_parser("oracle", help="gap report against brute force")
    oracle.add_argument("scenario", type=Path)
    oracle.add_argument("--k-paths", type=int, dest="k_paths")
    oracle.add_argument("--out", type=Path, help="output directory")

    validate = commands.add_parser("validate", help="check a configuration file")
    validate.add_argument("file", type=Path)
    validate.add_argument(
        "--kind",
        choices=["auto", "network", "job", "scenario", "sweep"],
        default="auto",
    )
    return parser


def _apply_overrides(
    config: ScenarioConfig, args: argparse.Namespace
) -> ScenarioConfig:
    update: dict[str, object] = {}
    if getattr(args, "seed", None) is not None:
        update["seed"] = args.seed
    if getattr(args, "scheduler", None) is not None:
        update["scheduler"] = SchedulerName(args.scheduler)
    if getattr(args, "k_paths", None) is not None:
        update["k_paths"] = args.k_paths
    return config.model_copy(update=update) if update else config


def _run(args: argparse.Namespace, cfg: Settings, out: Path) -> int:
    config = _apply_overrides(load_scenario(args.scenario), args)
    result = run_scenario(config, app_settings=cfg)
    stem = f"{config.name}-{config.scheduler.value}-s{config.seed}"
    if args.format == "json":
        written = write_json(result.report, out / f"{stem}.json")
    else:
        written = write_metrics_csv(
            [result.row], out / f"{stem}.csv", cfg.float_precision
        )
    print(written)
    if args.log_events:
        print(result.events.write(out / f"{stem}.events.jsonl"))
    if args.policy:
        print(write_json(result.policy, out / f"{stem}.policy.json"))
    sys.stdout.write(render_metrics_csv([result.row], cfg.float_precision))
    return 0


def _sweep(args: argparse.Namespace, cfg: Settings, out: Path) -> int:
    sweep = load_sweep(args.sweep)
    rows, axis_values = run_sweep(sweep, workers=args.workers, app_settings=cfg)
    print(write_metrics_csv(rows, out / f"{sweep.name}.csv", cfg.float_precision))
    trends = trend_summary(rows, axis_values)
    print(write_json(trends, out / f"{sweep.name}-trends.json"))
    return 0


def _oracle(args: argparse.Namespace, cfg: Settings, out: Path) -> int:
    config = _apply_overrides(load_scenario(args.scenario), args)
    report = oracle_report(config, app_settings=cfg)
    print(write_json(report, out / f"{config.name}-gap.json"))
    print(f"mean_gap={report.mean_gap:.6f} max_gap={report.max_gap:.6f}")
    return 0


def _detect_kind(data: object) -> str:
    if not isinstance(data, dict):
        raise ScenarioError("configuration must be a JSON object")
    if "base" in data:
        return "sweep"
    if "tasks" in data:
        return "job"
    if "seed" in data:
        return "scenario"
    if "nodes" in data:
        return "network"
    raise ScenarioError("cannot tell which kind of configuration this is")


def _validate(args: argparse.Namespace, cfg: Settings) -> int:
    try:
        text = args.file.read_text(encoding="utf-8")
    except OSError as exc:
        raise ScenarioError(f"Cannot read {args.file}: {exc.strerror}") from exc
    kind = args.kind
    if kind == "auto":
        try:
            kind = _detect_kind(json.loads(text))
        except json.JSONDecodeError as exc:
            raise ScenarioError(f"{args.file}: invalid JSON: {exc.msg}") from exc
    if kind == "network":
        load_network(text)
    elif kind == "job":
        parse_job_config(text, app_settings=cfg)
    elif kind == "scenario":
        materialise(load_scenario(args.file), app_settings=cfg)
    else:
        load_sweep(args.file)
    print(f"ok {kind} {args.file}")
    return 0


def main(argv: Sequence[str] | None = None) -> int:
    args = create_parser().parse_args(argv)
    cfg = settings
    if getattr(args, "timing", False):
        cfg = cfg.model_copy(update={"record_runtime": True})
    configure_logging(args.log_level or cfg.log_level)
    out = getattr(args, "out", None) or Path(cfg.output_dir)
    try:
        if args.command == "run":
            return _run(args, cfg, out)
        if args.command == "sweep":
            return _sweep(args, cfg, out)
        if args.command == "oracle":
            return _oracle(args, cfg, out)
        return _validate(args, cfg)
    except EdgeSchedError as exc:
        detail = " ".join(str(exc).split())
        print(f"error code={exc.code} detail={detail}", file=sys.stderr)
        logger.debug("command %s failed", args.command, exc_info=True)
        return 1


if __name__ == "__main__":
    sys.exit(main())
