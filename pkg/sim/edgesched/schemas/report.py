from typing import List, Optional

from pydantic import BaseModel, Field

from ..models.state import JobStatus

METRICS_HEADER = [
    "scenario",
    "seed",
    "scheduler",
    "nodes",
    "jobs",
    "bw_mean",
    "avg_throughput",
    "avg_wait_s",
    "runtime_ms",
]


class JobRecordOut(BaseModel):
    job_id: str
    status: JobStatus
    arrival: float
    scheduled: Optional[float] = None
    finish: Optional[float] = None
    waiting_time: float
    throughput: float
    throughput_history: List[List[float]] = Field(default_factory=list)

    model_config = {"from_attributes": True}


class MetricsReport(BaseModel):
    avg_throughput: float
    avg_wait_s: float
    records: List[JobRecordOut]
    scenario: Optional[dict] = None
    runtime_ms: float = 0.0


class MetricsRow(BaseModel):
    scenario: str
    seed: int
    scheduler: str
    nodes: int
    jobs: int
    bw_mean: float
    avg_throughput: float
    avg_wait_s: float
    runtime_ms: float


class GapRow(BaseModel):
    job: str
    flows: int
    lp_bound: float
    oracle_period: float
    jrba_period: float
    gap: float
    integral: bool


class GapReport(BaseModel):
    scenario: str
    rows: List[GapRow]
    mean_gap: float
    max_gap: float


class TrendSeed(BaseModel):
    seed: int
    axis_value: float
    throughput: dict
    wait: dict
    ordering_holds: bool
    separation_holds: bool
    wait_divergence_holds: bool


class TrendSummary(BaseModel):
    seeds: List[TrendSeed]
    ordering_count: int
    separation_count: int
    wait_divergence_count: int
