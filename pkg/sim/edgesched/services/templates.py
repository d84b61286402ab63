"""Bundled job shapes used by scenarios and sweeps.

Workloads, memory and volumes are illustrative constants in the units of the
default device tiers (work-units, memory units, data units per batch).
"""

from __future__ import annotations

from collections.abc import Callable

from ..core.config import Settings
from ..core.errors import ScenarioError
from ..models.job import Job
from ..schemas.job import JobConfig, TaskConfig
from ..schemas.scenario import TemplateRef
from .jobgraph import job_from_config


def _task(
    task_id: str,
    workload: float,
    memory: float,
    outputs: dict[str, float] | None = None,
) -> TaskConfig:
    outputs = outputs or {}
    return TaskConfig(
        id=task_id,
        downstream=list(outputs),
        memory_resource=memory,
        workload=workload,
        output_size=outputs,
    )


def attribute_pipeline() -> JobConfig:
    """Decoder, detector, seven attribute recognisers in parallel, tracker."""
    recognisers = [f"m{i}" for i in range(3, 10)]
    tasks = [
        _task("m1", 2.0, 1.0, {"m2": 4.0}),
        _task("m2", 8.0, 2.0, {name: 1.0 for name in recognisers}),
        *(_task(name, 4.0, 1.0, {"m10": 0.2}) for name in recognisers),
        _task("m10", 2.0, 1.0),
    ]
    return JobConfig(job="attr", source=0, input_size=4.0, tasks=tasks)


def diamond() -> JobConfig:
    return JobConfig(
        job="diamond",
        source=0,
        input_size=2.0,
        tasks=[
            _task("task1", 4.0, 1.0, {"task2": 2.0, "task3": 2.0}),
            _task("task2", 6.0, 2.0, {"task4": 1.0}),
            _task("task3", 6.0, 2.0, {"task4": 1.0}),
            _task("task4", 4.0, 1.0),
        ],
    )


def motivating() -> JobConfig:
    """Six-stage job of the five-node walkthrough: input 5, workload 55,
    memory 11, with the two outputs of ``a`` carrying 2 and 1 units.
    """
    return JobConfig(
        job="motivating",
        source=3,
        input_size=5.0,
        total_memory_request=11.0,
        tasks=[
            _task("a", 5.0, 3.0, {"b": 2.0, "c": 1.0}),
            _task("b", 10.0, 2.0, {"d": 1.0}),
            _task("c", 10.0, 2.0, {"e": 1.0}),
            _task("d", 10.0, 2.0, {"f": 1.0}),
            _task("e", 10.0, 1.0, {"f": 1.0}),
            _task("f", 10.0, 1.0),
        ],
    )


TEMPLATES: dict[str, Callable[[], JobConfig]] = {
    "attribute-pipeline": attribute_pipeline,
    "diamond": diamond,
    "motivating": motivating,
}


def scale_config(
    config: JobConfig,
    workload_scale: float = 1.0,
    volume_scale: float = 1.0,
    input_size: float | None = None,
) -> JobConfig:
    tasks = [
        task.model_copy(
            update={
                "workload": task.workload * workload_scale,
                "output_size": {
                    target: volume * volume_scale
                    for target, volume in task.output_size.items()
                },
            }
        )
        for task in config.tasks
    ]
    size = input_size if input_size is not None else config.input_size * volume_scale
    return config.model_copy(update={"tasks": tasks, "input_size": size})


def build_template(
    ref: TemplateRef,
    *,
    source: int | None = None,
    stream_length: int | None = None,
    app_settings: Settings | None = None,
) -> Job:
    try:
        factory = TEMPLATES[ref.template]
    except KeyError as exc:
        raise ScenarioError(f"Unknown job template {ref.template!r}") from exc
    config = scale_config(
        factory(), ref.workload_scale, ref.volume_scale, ref.input_size
    )
    update: dict[str, object] = {}
    if source is not None:
        update["source"] = source
    if stream_length is not None:
        update["stream_length"] = stream_length
    if update:
        config = config.model_copy(update=update)
    return job_from_config(config, app_settings=app_settings)
