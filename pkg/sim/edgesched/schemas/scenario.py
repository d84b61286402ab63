from enum import Enum
from typing import List, Literal, Optional

from pydantic import BaseModel, Field, model_validator

from .job import JobConfig
from .network import GeneratorConfig, NetworkConfig


class SchedulerName(str, Enum):
    LR = "lr"
    BR = "br"
    TP = "tp"
    OTFS = "otfs"
    OTFA = "otfa"


class TemplateRef(BaseModel):
    template: Literal["attribute-pipeline", "diamond", "motivating"]
    workload_scale: float = Field(default=1.0, gt=0)
    volume_scale: float = Field(default=1.0, gt=0)
    input_size: Optional[float] = Field(default=None, ge=0)


class ScenarioConfig(BaseModel):
    name: str
    seed: int
    scheduler: SchedulerName = SchedulerName.OTFA
    k_paths: Optional[int] = Field(default=None, ge=1)
    network: Optional[NetworkConfig] = None
    generator: Optional[GeneratorConfig] = None
    jobs: List[JobConfig] = Field(default_factory=list)
    templates: List[TemplateRef] = Field(default_factory=list)
    n_jobs: int = Field(default=0, ge=0)
    arrival_rate: float = Field(default=0.5, gt=0)
    stream_length: Optional[int] = Field(default=None, ge=1)
    max_wait_seconds: Optional[float] = Field(default=None, gt=0)

    @model_validator(mode="after")
    def ensure_sources(self) -> "ScenarioConfig":
        if (self.network is None) == (self.generator is None):
            raise ValueError("exactly one of 'network' or 'generator' is required")
        if self.templates and not self.n_jobs:
            raise ValueError("'templates' requires a positive 'n_jobs'")
        if self.n_jobs and not self.templates:
            raise ValueError("'n_jobs' requires at least one template")
        return self

    @property
    def nodes(self) -> int:
        if self.network is not None:
            return len(self.network.nodes)
        assert self.generator is not None
        return self.generator.nodes

    @property
    def total_jobs(self) -> int:
        return len(self.jobs) + self.n_jobs

    @property
    def bw_mean(self) -> float:
        if self.generator is not None:
            return self.generator.bw_mean
        assert self.network is not None
        links = self.network.links
        return sum(link.bandwidth for link in links) / len(links) if links else 0.0


class SweepConfig(BaseModel):
    name: str
    base: ScenarioConfig
    axis: Literal["nodes", "jobs", "bw_mean"]
    values: List[float] = Field(min_length=1)
    seeds: List[int] = Field(min_length=1)
    schedulers: List[SchedulerName] = Field(
        default_factory=lambda: list(SchedulerName)
    )

    @model_validator(mode="after")
    def ensure_generator(self) -> "SweepConfig":
        if self.axis in ("nodes", "bw_mean") and self.base.generator is None:
            raise ValueError(f"axis {self.axis!r} needs a generated network")
        if self.axis == "jobs" and not self.base.templates:
            raise ValueError("axis 'jobs' needs job templates")
        return self
