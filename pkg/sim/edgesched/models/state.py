from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from enum import Enum

from .job import Job
from .network import Path
from .plan import Flow, Placement


class JobStatus(str, Enum):
    WAITING = "waiting"
    RUNNING = "running"
    COMPLETED = "completed"
    FAILED = "failed"


class EventKind(int, Enum):
    # Completions sort before arrivals at the same instant.
    COMPLETION = 0
    ARRIVAL = 1


@dataclass(slots=True)
class JobRecord:
    job_id: str
    arrival: float
    stream_length: int
    scheduled: float | None = None
    finish: float | None = None
    status: JobStatus = JobStatus.WAITING
    throughput_history: list[tuple[float, float]] = field(default_factory=list)
    remaining_batches: float = 0.0

    def __post_init__(self) -> None:
        if not self.remaining_batches:
            self.remaining_batches = float(self.stream_length)

    @property
    def waiting_time(self) -> float:
        if self.scheduled is None:
            end = self.finish if self.finish is not None else self.arrival
            return end - self.arrival
        return self.scheduled - self.arrival

    @property
    def achieved_throughput(self) -> float:
        """Time-weighted mean of the throughput step function over the run."""
        if self.scheduled is None or self.finish is None or not self.throughput_history:
            return 0.0
        duration = self.finish - self.scheduled
        if duration <= 0:
            return self.throughput_history[-1][1]
        edges = [t for t, _ in self.throughput_history[1:]] + [self.finish]
        area = math.fsum(
            tp * (end - start)
            for (start, tp), end in zip(self.throughput_history, edges)
        )
        return area / duration

    def mark_scheduled(self, when: float, throughput: float) -> None:
        self.scheduled = when
        self.status = JobStatus.RUNNING
        self.throughput_history.append((when, throughput))

    def mark_rate_change(self, when: float, throughput: float) -> None:
        if self.throughput_history and self.throughput_history[-1][0] == when:
            self.throughput_history[-1] = (when, throughput)
        else:
            self.throughput_history.append((when, throughput))

    def mark_completed(self, when: float) -> None:
        self.finish = when
        self.remaining_batches = 0.0
        self.status = JobStatus.COMPLETED

    def mark_failed(self, when: float) -> None:
        self.finish = when
        self.status = JobStatus.FAILED


@dataclass(slots=True)
class RunningJob:
    job: Job
    placement: Placement
    flows: tuple[Flow, ...]
    rates: dict[str, float]
    period: float
    start: float
    finish: float
    last_update: float
    routes: dict[str, Path] = field(default_factory=dict)
    version: int = 0

    def advance(self, now: float, record: JobRecord) -> None:
        """Consume batches at the current period up to ``now``."""
        if self.period > 0 and now > self.last_update:
            done = (now - self.last_update) / self.period
            record.remaining_batches = max(record.remaining_batches - done, 0.0)
        self.last_update = now


@dataclass(slots=True)
class SchedulerState:
    clock: float = 0.0
    waiting: list[Job] = field(default_factory=list)
    running: dict[str, RunningJob] = field(default_factory=dict)
    events: list[tuple[float, int, int, int, str]] = field(default_factory=list)
    records: dict[str, JobRecord] = field(default_factory=dict)
    order: dict[str, int] = field(default_factory=dict)
    pending: dict[str, Job] = field(default_factory=dict)
    seed: int | None = None

    def push(self, time: float, kind: EventKind, job_id: str, version: int = 0) -> None:
        heapq.heappush(
            self.events, (time, int(kind), self.order[job_id], version, job_id)
        )

    def pop_instant(self) -> list[tuple[float, int, int, int, str]]:
        """Pop every event sharing the earliest timestamp, in total order."""
        now = self.events[0][0]
        batch = []
        while self.events and self.events[0][0] == now:
            batch.append(heapq.heappop(self.events))
        return batch

    @property
    def flows_running(self) -> dict[str, Flow]:
        return {
            flow.id: flow for entry in self.running.values() for flow in entry.flows
        }

    @property
    def idle(self) -> bool:
        return not self.events and not self.waiting and not self.running
