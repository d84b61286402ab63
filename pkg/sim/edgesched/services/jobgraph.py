from __future__ import annotations

import json
import logging
import math
import re
from collections.abc import Sequence

import networkx as nx
from pydantic import ValidationError

from ..core.config import Settings, settings
from ..core.errors import (
    CycleDetectedError,
    MissingFieldError,
    UnknownDownstreamTaskError,
    UnknownTaskError,
)
from ..models.job import Dependency, Job, JobProfile, Task
from ..schemas.job import JobConfig, TaskConfig
from ..schemas.network import TierConfig

logger = logging.getLogger(__name__)

_DIGITS = re.compile(r"(\d+)")


def task_sort_key(task_id: str) -> tuple:
    """Natural order, so ``task2`` sorts before ``task10``."""
    return tuple(
        (0, int(part), "") if part.isdigit() else (1, 0, part)
        for part in _DIGITS.split(task_id)
        if part
    )


def _task_of_error(config_data: object, exc: ValidationError) -> MissingFieldError:
    error = exc.errors()[0]
    location = error.get("loc", ())
    task_id = None
    if len(location) >= 2 and location[0] == "tasks" and isinstance(location[1], int):
        try:
            tasks = config_data["tasks"]  # type: ignore[index]
            task_id = str(tasks[location[1]]["id"])
        except (KeyError, IndexError, TypeError):
            task_id = f"#{location[1]}"
    field = str(location[-1]) if location else "?"
    return MissingFieldError(task_id, field)


def job_from_config(
    config: JobConfig, *, app_settings: Settings | None = None
) -> Job:
    app_settings = app_settings or settings
    known = {task.id for task in config.tasks}
    tasks = tuple(
        Task(id=task.id, workload=task.workload, mem_demand=task.memory_resource)
        for task in config.tasks
    )

    edges: list[Dependency] = []
    for task in config.tasks:
        for target in task.downstream:
            if target not in known:
                raise UnknownDownstreamTaskError(task.id, target)
            edges.append(
                Dependency(task.id, target, float(task.output_size.get(target, 0.0)))
            )
        for target in task.output_size:
            if target not in task.downstream:
                raise UnknownDownstreamTaskError(task.id, target)

    graph = nx.DiGraph()
    graph.add_nodes_from(known)
    graph.add_edges_from(edge.pair for edge in edges)
    if not nx.is_directed_acyclic_graph(graph):
        cycle = nx.find_cycle(graph)
        raise CycleDetectedError(min((u for u, _ in cycle), key=task_sort_key))

    if config.input_split:
        for root in config.input_split:
            if root not in known:
                raise UnknownTaskError(root)

    job = Job(
        id=config.job,
        tasks=tasks,
        edges=tuple(edges),
        source_node=config.source,
        input_size=config.input_size,
        arrival_time=config.arrival_time,
        stream_length=config.stream_length or app_settings.default_stream_length,
        total_memory_request=config.total_memory_request,
        input_split=dict(config.input_split) if config.input_split else None,
    )
    declared = config.total_memory_request
    if declared is not None and not math.isclose(
        declared, job.total_mem_demand, rel_tol=1e-9, abs_tol=1e-9
    ):
        logger.warning(
            "job %s declares total_memory_request %s but its tasks sum to %s",
            job.id,
            declared,
            job.total_mem_demand,
        )
    return job


def parse_job_config(text: str, *, app_settings: Settings | None = None) -> Job:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MissingFieldError(None, f"<json: {exc.msg}>") from exc
    try:
        config = JobConfig.model_validate(data)
    except ValidationError as exc:
        raise _task_of_error(data, exc) from exc
    return job_from_config(config, app_settings=app_settings)


def job_to_config(job: Job) -> JobConfig:
    downstream: dict[str, list[str]] = {task.id: [] for task in job.tasks}
    outputs: dict[str, dict[str, float]] = {task.id: {} for task in job.tasks}
    for edge in job.edges:
        downstream[edge.producer].append(edge.consumer)
        outputs[edge.producer][edge.consumer] = edge.volume
    return JobConfig(
        job=job.id,
        total_memory_request=job.total_memory_request,
        source=job.source_node,
        input_size=job.input_size,
        arrival_time=job.arrival_time,
        stream_length=job.stream_length,
        input_split=dict(job.input_split) if job.input_split else None,
        tasks=[
            TaskConfig(
                id=task.id,
                downstream=downstream[task.id],
                memory_resource=task.mem_demand,
                workload=task.workload,
                output_size=outputs[task.id],
            )
            for task in job.tasks
        ],
    )


def render_job_config(job: Job) -> str:
    return job_to_config(job).model_dump_json(indent=2, exclude_none=True)


def topological_order(job: Job) -> list[str]:
    """Kahn's order with ties broken by ascending (natural) task id."""
    graph = nx.DiGraph()
    graph.add_nodes_from(job.task_ids)
    graph.add_edges_from(edge.pair for edge in job.edges)
    return list(nx.lexicographical_topological_sort(graph, key=task_sort_key))


def predecessors(job: Job, task_id: str) -> list[str]:
    if not job.has_task(task_id):
        raise UnknownTaskError(task_id)
    found = {edge.producer for edge in job.edges if edge.consumer == task_id}
    return sorted(found, key=task_sort_key)


def successors(job: Job, task_id: str) -> list[str]:
    if not job.has_task(task_id):
        raise UnknownTaskError(task_id)
    found = {edge.consumer for edge in job.edges if edge.producer == task_id}
    return sorted(found, key=task_sort_key)


def build_profile(job: Job, tiers: Sequence[TierConfig]) -> JobProfile:
    """Simulated offline profiling: workload over the tier's compute power."""
    return JobProfile(
        job_id=job.id,
        seconds={
            (task.id, tier.name): task.workload / tier.power
            for task in job.tasks
            for tier in tiers
        },
    )
