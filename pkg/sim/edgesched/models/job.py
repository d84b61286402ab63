from __future__ import annotations

import math
from collections.abc import Mapping
from dataclasses import dataclass, field

# Pseudo-task pinned to the job's source node; it emits the raw input.
SOURCE_TASK = "__source__"


@dataclass(frozen=True, slots=True)
class Task:
    id: str
    workload: float
    mem_demand: float


@dataclass(frozen=True, slots=True)
class Dependency:
    producer: str
    consumer: str
    volume: float

    @property
    def pair(self) -> tuple[str, str]:
        return (self.producer, self.consumer)

    @property
    def from_source(self) -> bool:
        return self.producer == SOURCE_TASK


@dataclass(frozen=True, slots=True)
class Job:
    id: str
    tasks: tuple[Task, ...]
    edges: tuple[Dependency, ...]
    source_node: int
    input_size: float
    arrival_time: float = 0.0
    stream_length: int = 100
    total_memory_request: float | None = None
    input_split: Mapping[str, float] | None = None
    _index: dict[str, Task] = field(
        default_factory=dict, init=False, repr=False, compare=False
    )

    def __post_init__(self) -> None:
        self._index.update({task.id: task for task in self.tasks})

    def task(self, task_id: str) -> Task:
        return self._index[task_id]

    def has_task(self, task_id: str) -> bool:
        return task_id in self._index

    @property
    def task_ids(self) -> tuple[str, ...]:
        return tuple(task.id for task in self.tasks)

    @property
    def roots(self) -> tuple[str, ...]:
        consumers = {edge.consumer for edge in self.edges}
        return tuple(task.id for task in self.tasks if task.id not in consumers)

    @property
    def total_mem_demand(self) -> float:
        return math.fsum(task.mem_demand for task in self.tasks)

    @property
    def total_workload(self) -> float:
        return math.fsum(task.workload for task in self.tasks)

    def source_edges(self) -> tuple[Dependency, ...]:
        split = self.input_split or {}
        return tuple(
            Dependency(SOURCE_TASK, root, float(split.get(root, self.input_size)))
            for root in self.roots
        )

    def dependencies(self) -> tuple[Dependency, ...]:
        """Source edges first, then task-to-task edges in declaration order."""
        return self.source_edges() + self.edges

    def inbound(self, task_id: str) -> tuple[Dependency, ...]:
        return tuple(dep for dep in self.dependencies() if dep.consumer == task_id)

    def with_arrival(self, job_id: str, arrival_time: float, **changes) -> Job:
        return Job(
            id=job_id,
            tasks=self.tasks,
            edges=self.edges,
            source_node=changes.get("source_node", self.source_node),
            input_size=self.input_size,
            arrival_time=arrival_time,
            stream_length=changes.get("stream_length", self.stream_length),
            total_memory_request=self.total_memory_request,
            input_split=self.input_split,
        )


@dataclass(frozen=True, slots=True)
class JobProfile:
    """Per-task execution time (seconds) on each device tier."""

    job_id: str
    seconds: Mapping[tuple[str, str], float]

    def lookup(self, task_id: str, tier: str) -> float:
        return self.seconds[(task_id, tier)]
