from __future__ import annotations

import logging
import math
import statistics
import time
from collections import defaultdict
from collections.abc import Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

from ..core.config import Settings, settings
from ..core.errors import EmptyRecordSetError
from ..models.state import JobRecord
from ..schemas.network import LinkConfig, NetworkConfig, NodeConfig
from ..schemas.policy import PolicyDocument
from ..schemas.report import (
    GapReport,
    GapRow,
    JobRecordOut,
    MetricsReport,
    MetricsRow,
    TrendSeed,
    TrendSummary,
)
from ..schemas.scenario import ScenarioConfig, SchedulerName, SweepConfig
from ..utils.events import EventLog
from .allocator import allocate_tasks
from .engine import SimulationEngine
from .jrba import (
    allocate_bandwidth,
    is_integral,
    oracle_best_plan,
    round_routing,
    solve_relaxation,
)
from .scenarios import materialise, sweep_cells
from .templates import motivating

logger = logging.getLogger(__name__)

# Slack on ordinal trend checks between schedulers.
TREND_TOLERANCE = 1e-9


def compute_metrics(
    records: Sequence[JobRecord],
    *,
    scenario: ScenarioConfig | None = None,
    runtime_ms: float = 0.0,
) -> MetricsReport:
    """Arithmetic means of per-job achieved throughput and waiting time."""
    if not records:
        raise EmptyRecordSetError()
    rows = [
        JobRecordOut(
            job_id=record.job_id,
            status=record.status,
            arrival=record.arrival,
            scheduled=record.scheduled,
            finish=record.finish,
            waiting_time=record.waiting_time,
            throughput=record.achieved_throughput,
            throughput_history=[list(entry) for entry in record.throughput_history],
        )
        for record in records
    ]
    return MetricsReport(
        avg_throughput=math.fsum(row.throughput for row in rows) / len(rows),
        avg_wait_s=math.fsum(row.waiting_time for row in rows) / len(rows),
        records=rows,
        scenario=scenario.model_dump(mode="json") if scenario is not None else None,
        runtime_ms=runtime_ms,
    )


def build_motivating_scenario() -> ScenarioConfig:
    """Five-node walkthrough instance, nodes e1..e5 as ids 0..4.

    Stated values: input 5, total workload 55, total memory 11, e1 power 200,
    source e4, route bottleneck 10. Link weights other than the e4-e2-e1
    route, e1 memory 12 and the per-task split are a reconstruction.
    """
    nodes = [
        NodeConfig(id=0, power=200.0, memory=12.0, tier="e1"),
        NodeConfig(id=1, power=20.0, memory=1.0, tier="e2"),
        NodeConfig(id=2, power=20.0, memory=1.0, tier="e3"),
        NodeConfig(id=3, power=50.0, memory=4.0, tier="e4"),
        NodeConfig(id=4, power=20.0, memory=1.0, tier="e5"),
    ]
    links = [
        LinkConfig(u=3, v=1, bandwidth=10.0),
        LinkConfig(u=1, v=0, bandwidth=15.0),
        LinkConfig(u=3, v=2, bandwidth=6.0),
        LinkConfig(u=2, v=0, bandwidth=8.0),
        LinkConfig(u=4, v=1, bandwidth=5.0),
        LinkConfig(u=4, v=2, bandwidth=5.0),
    ]
    return ScenarioConfig(
        name="motivating",
        seed=0,
        scheduler=SchedulerName.LR,
        k_paths=4,
        network=NetworkConfig(nodes=nodes, links=links),
        jobs=[motivating()],
    )


@dataclass(slots=True)
class RunResult:
    config: ScenarioConfig
    records: list[JobRecord]
    report: MetricsReport
    row: MetricsRow
    events: EventLog
    policy: PolicyDocument


def metrics_row(config: ScenarioConfig, report: MetricsReport) -> MetricsRow:
    return MetricsRow(
        scenario=config.name,
        seed=config.seed,
        scheduler=config.scheduler.value,
        nodes=config.nodes,
        jobs=config.total_jobs,
        bw_mean=config.bw_mean,
        avg_throughput=report.avg_throughput,
        avg_wait_s=report.avg_wait_s,
        runtime_ms=report.runtime_ms,
    )


def run_scenario(
    config: ScenarioConfig, *, app_settings: Settings | None = None
) -> RunResult:
    cfg = app_settings or settings
    scenario = materialise(config, app_settings=cfg)
    events = EventLog(precision=cfg.float_precision)
    started = time.perf_counter()
    engine = SimulationEngine(
        scenario.network,
        scenario.jobs,
        config.scheduler,
        k=config.k_paths,
        seed=config.seed,
        event_log=events,
        max_wait_seconds=config.max_wait_seconds,
        app_settings=cfg,
    )
    records = engine.run_to_completion()
    elapsed = (time.perf_counter() - started) * 1000.0
    report = compute_metrics(
        records,
        scenario=config,
        runtime_ms=elapsed if cfg.record_runtime else 0.0,
    )
    logger.info(
        "scenario %s seed %d %s: throughput %.6f wait %.6f",
        config.name,
        config.seed,
        config.scheduler.value,
        report.avg_throughput,
        report.avg_wait_s,
    )
    return RunResult(
        config=config,
        records=records,
        report=report,
        row=metrics_row(config, report),
        events=events,
        policy=engine.policy_document(),
    )


def _run_cell(args: tuple[ScenarioConfig, Settings]) -> MetricsRow:
    config, cfg = args
    return run_scenario(config, app_settings=cfg).row


def run_sweep(
    sweep: SweepConfig,
    *,
    workers: int | None = None,
    app_settings: Settings | None = None,
) -> tuple[list[MetricsRow], list[float]]:
    """Run every sweep cell; returns rows with their axis values, in cell order."""
    cfg = app_settings or settings
    cells = sweep_cells(sweep)
    jobs = [(config, cfg) for _, config in cells]
    count = workers or cfg.sweep_workers
    if count > 1:
        with ProcessPoolExecutor(max_workers=count) as pool:
            rows = list(pool.map(_run_cell, jobs))
    else:
        rows = [_run_cell(job) for job in jobs]
    logger.info("sweep %s: %d cells", sweep.name, len(rows))
    return rows, [value for value, _ in cells]


def trend_summary(
    rows: Sequence[MetricsRow], axis_values: Sequence[float]
) -> TrendSummary:
    """Per (seed, axis value): does the throughput ordering hold, do the
    network-aware schedulers beat the whole-job placements, and do the
    whole-job placements wait longer?
    """
    groups: dict[tuple[int, float], dict[str, MetricsRow]] = defaultdict(dict)
    for row, value in zip(rows, axis_values):
        groups[(row.seed, value)][row.scheduler] = row

    seeds = []
    for (seed, value), by_name in groups.items():
        tp = {name: row.avg_throughput for name, row in by_name.items()}
        wait = {name: row.avg_wait_s for name, row in by_name.items()}
        complete = all(name.value in by_name for name in SchedulerName)
        ordering = separation = divergence = False
        if complete:
            ordering = (
                tp["otfa"] >= tp["otfs"] - TREND_TOLERANCE
                and tp["otfs"] >= tp["tp"] - TREND_TOLERANCE
            )
            separation = min(tp["tp"], tp["otfs"], tp["otfa"]) > max(
                tp["lr"], tp["br"]
            )
            divergence = min(wait["lr"], wait["br"]) > max(
                wait["tp"], wait["otfs"], wait["otfa"]
            )
        seeds.append(
            TrendSeed(
                seed=seed,
                axis_value=value,
                throughput=tp,
                wait=wait,
                ordering_holds=ordering,
                separation_holds=separation,
                wait_divergence_holds=divergence,
            )
        )
    return TrendSummary(
        seeds=seeds,
        ordering_count=sum(entry.ordering_holds for entry in seeds),
        separation_count=sum(entry.separation_holds for entry in seeds),
        wait_divergence_count=sum(entry.wait_divergence_holds for entry in seeds),
    )


def oracle_report(
    config: ScenarioConfig, *, app_settings: Settings | None = None
) -> GapReport:
    """Per job, on a fresh copy of the network: LP bound, exhaustive optimum
    and the rounded plan over every simple path.
    """
    cfg = app_settings or settings
    scenario = materialise(config, app_settings=cfg)
    rows = []
    for job in scenario.jobs:
        net = scenario.network.copy()
        _, flows = allocate_tasks(net, job, config.k_paths, app_settings=cfg)
        if not flows:
            rows.append(
                GapRow(
                    job=job.id,
                    flows=0,
                    lp_bound=0.0,
                    oracle_period=0.0,
                    jrba_period=0.0,
                    gap=0.0,
                    integral=True,
                )
            )
            continue
        best = oracle_best_plan(net, flows, app_settings=cfg)
        solution, index = solve_relaxation(
            net, flows, exhaustive=True, app_settings=cfg
        )
        plan = allocate_bandwidth(net, flows, round_routing(solution, index))
        oracle_period = best.period
        rows.append(
            GapRow(
                job=job.id,
                flows=len(flows),
                lp_bound=float(solution.values[index.th]),
                oracle_period=oracle_period,
                jrba_period=plan.period,
                gap=plan.period / oracle_period - 1.0 if oracle_period > 0 else 0.0,
                integral=is_integral(solution, index),
            )
        )
    gaps = [row.gap for row in rows]
    return GapReport(
        scenario=config.name,
        rows=rows,
        mean_gap=statistics.fmean(gaps) if gaps else 0.0,
        max_gap=max(gaps, default=0.0),
    )
