from __future__ import annotations

import logging
from collections.abc import Iterator

import numpy as np
import pytest

from edgesched.core.config import Settings, settings
from edgesched.models import EdgeNode, Job, Link, Network
from edgesched.schemas.job import JobConfig, TaskConfig
from edgesched.schemas.scenario import ScenarioConfig
from edgesched.services.harness import build_motivating_scenario
from edgesched.services.jobgraph import job_from_config
from edgesched.services.scenarios import Scenario, materialise


def make_network(
    nodes: list[tuple[float, float]],
    links: list[tuple[int, int, float]],
) -> Network:
    """``nodes`` as (power, memory) in id order, ``links`` as (u, v, bandwidth)."""
    return Network(
        [
            EdgeNode(id=i, compute_power=power, mem_capacity=mem, base_available=mem)
            for i, (power, mem) in enumerate(nodes)
        ],
        [Link(u, v, bandwidth) for u, v, bandwidth in links],
    )


def make_job(
    job_id: str,
    tasks: list[tuple[str, float, float, dict[str, float]]],
    *,
    source: int = 0,
    input_size: float = 1.0,
    arrival_time: float = 0.0,
    stream_length: int = 10,
) -> Job:
    """``tasks`` as (id, workload, memory, {downstream: volume})."""
    return job_from_config(
        JobConfig(
            job=job_id,
            source=source,
            input_size=input_size,
            arrival_time=arrival_time,
            stream_length=stream_length,
            tasks=[
                TaskConfig(
                    id=task_id,
                    downstream=list(outputs),
                    memory_resource=memory,
                    workload=workload,
                    output_size=outputs,
                )
                for task_id, workload, memory, outputs in tasks
            ],
        )
    )


@pytest.fixture
def app_settings() -> Settings:
    return settings.model_copy(
        update={"environment": "test", "check_invariants": True, "k_paths": 4}
    )


@pytest.fixture(autouse=True)
def restore_logging() -> Iterator[None]:
    yield
    logger = logging.getLogger("edgesched")
    logger.handlers.clear()
    logger.propagate = True
    logger.setLevel(logging.NOTSET)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240501)


@pytest.fixture
def line_network() -> Network:
    """0 - 1 - 2, generous memory on every node."""
    return make_network(
        [(10.0, 8.0), (10.0, 8.0), (10.0, 8.0)],
        [(0, 1, 10.0), (1, 2, 10.0)],
    )


@pytest.fixture
def motivating_config() -> ScenarioConfig:
    return build_motivating_scenario()


@pytest.fixture
def motivating(motivating_config: ScenarioConfig, app_settings: Settings) -> Scenario:
    return materialise(motivating_config, app_settings=app_settings)


@pytest.fixture
def chain_job() -> Job:
    return make_job(
        "chain",
        [("t1", 10.0, 1.0, {"t2": 2.0}), ("t2", 10.0, 1.0, {})],
        input_size=4.0,
    )
