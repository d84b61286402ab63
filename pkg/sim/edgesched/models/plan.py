from __future__ import annotations

import math
from collections.abc import Mapping
from dataclasses import dataclass, field

from .network import Path


def flow_id(job_id: str, producer: str, consumer: str) -> str:
    return f"{job_id}:{producer}->{consumer}"


@dataclass(slots=True)
class Placement:
    job_id: str
    assignment: dict[str, int]

    def node_of(self, task_id: str) -> int:
        return self.assignment[task_id]


@dataclass(frozen=True, slots=True)
class Flow:
    id: str
    src: int
    dst: int
    volume: float
    job: str
    dependency: tuple[str, str]


@dataclass(slots=True)
class FlowPlan:
    flows: tuple[Flow, ...] = ()
    routes: dict[str, Path] = field(default_factory=dict)
    rates: dict[str, float] = field(default_factory=dict)
    lp_bound: float | None = None

    @property
    def period(self) -> float:
        if not self.flows:
            return 0.0
        return max(flow.volume / self.rates[flow.id] for flow in self.flows)

    @property
    def throughput(self) -> float:
        period = self.period
        return math.inf if period == 0 else 1.0 / period

    def flow_period(self, flow: Flow) -> float:
        return flow.volume / self.rates[flow.id]

    def for_job(self, job_id: str) -> FlowPlan:
        flows = tuple(flow for flow in self.flows if flow.job == job_id)
        return FlowPlan(
            flows=flows,
            routes={flow.id: self.routes[flow.id] for flow in flows},
            rates={flow.id: self.rates[flow.id] for flow in flows},
        )


@dataclass(frozen=True, slots=True)
class PeriodBreakdown:
    compute_times: Mapping[str, float]
    comm_times: Mapping[tuple[str, str], float]
    period: float

    @property
    def throughput(self) -> float:
        return math.inf if self.period == 0 else 1.0 / self.period

    @property
    def bottleneck(self) -> str | tuple[str, str] | None:
        candidates = [*self.compute_times.items(), *self.comm_times.items()]
        if not candidates:
            return None
        return max(candidates, key=lambda item: item[1])[0]
