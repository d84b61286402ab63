from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import TypeVar

import numpy as np
from pydantic import BaseModel, ValidationError

from ..core.config import Settings, settings
from ..core.errors import ScenarioError
from ..models.job import Job
from ..models.network import Network
from ..schemas.scenario import ScenarioConfig, SchedulerName, SweepConfig
from .engine import generate_arrivals
from .jobgraph import job_from_config
from .templates import build_template
from .topology import network_from_config, network_from_generator

logger = logging.getLogger(__name__)

ConfigT = TypeVar("ConfigT", bound=BaseModel)


@dataclass(slots=True)
class Scenario:
    config: ScenarioConfig
    network: Network
    jobs: list[Job]


def read_config(path: Path, model: type[ConfigT]) -> ConfigT:
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ScenarioError(
            f"Cannot read {path}: {exc.strerror}", path=str(path)
        ) from exc
    try:
        return model.model_validate_json(text)
    except ValidationError as exc:
        error = exc.errors()[0]
        where = ".".join(str(part) for part in error.get("loc", ())) or "<root>"
        raise ScenarioError(
            f"{path}: {where}: {error.get('msg', 'invalid value')}", path=str(path)
        ) from exc


def load_scenario(path: Path) -> ScenarioConfig:
    return read_config(path, ScenarioConfig)


def load_sweep(path: Path) -> SweepConfig:
    return read_config(path, SweepConfig)


def _stream_seeds(seed: int) -> tuple[int, int]:
    network_seq, arrival_seq = np.random.SeedSequence(seed).spawn(2)
    return (
        int(network_seq.generate_state(1)[0]),
        int(arrival_seq.generate_state(1)[0]),
    )


def materialise(
    config: ScenarioConfig, *, app_settings: Settings | None = None
) -> Scenario:
    """Build the network and the full job list a scenario describes.

    Generated networks and Poisson arrivals draw from independent streams
    derived from the scenario seed, so every scheduler sees the same inputs.
    """
    cfg = app_settings or settings
    network_seed, arrival_seed = _stream_seeds(config.seed)
    if config.network is not None:
        network = network_from_config(config.network)
    else:
        assert config.generator is not None
        network = network_from_generator(config.generator, network_seed)

    jobs: list[Job] = []
    for job_config in config.jobs:
        if job_config.source >= network.size:
            raise ScenarioError(
                f"job {job_config.job} names source node {job_config.source} "
                f"outside a {network.size}-node network",
                job=job_config.job,
            )
        if job_config.stream_length is None and config.stream_length is not None:
            job_config = job_config.model_copy(
                update={"stream_length": config.stream_length}
            )
        jobs.append(job_from_config(job_config, app_settings=cfg))

    if config.n_jobs:
        templates = [build_template(ref, app_settings=cfg) for ref in config.templates]
        jobs += generate_arrivals(
            templates,
            config.n_jobs,
            config.arrival_rate,
            arrival_seed,
            source_nodes=network.size,
            stream_length=config.stream_length,
        )
    logger.info(
        "scenario %s seed %d: %d nodes, %d links, %d jobs",
        config.name,
        config.seed,
        network.size,
        len(network.links),
        len(jobs),
    )
    return Scenario(config=config, network=network, jobs=jobs)


def with_axis(base: ScenarioConfig, axis: str, value: float) -> ScenarioConfig:
    if axis == "jobs":
        return base.model_copy(update={"n_jobs": int(value)})
    assert base.generator is not None
    if axis == "nodes":
        generator = base.generator.model_copy(update={"nodes": int(value)})
    elif axis == "bw_mean":
        generator = base.generator.model_copy(update={"bw_mean": float(value)})
    else:
        raise ScenarioError(f"Unknown sweep axis {axis!r}")
    return base.model_copy(update={"generator": generator})


def sweep_cells(sweep: SweepConfig) -> list[tuple[float, ScenarioConfig]]:
    """Every (axis value, seed, scheduler) cell in row order."""
    cells = []
    for value in sweep.values:
        varied = with_axis(sweep.base, sweep.axis, value)
        for seed in sweep.seeds:
            for scheduler in sweep.schedulers:
                cells.append(
                    (
                        value,
                        varied.model_copy(
                            update={
                                "seed": seed,
                                "scheduler": SchedulerName(scheduler),
                            }
                        ),
                    )
                )
    return cells
