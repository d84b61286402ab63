from __future__ import annotations

import json
import logging
from pathlib import Path

import pytest

from edgesched.core.errors import (
    CycleDetectedError,
    MissingFieldError,
    UnknownDownstreamTaskError,
    UnknownTaskError,
)
from edgesched.models import SOURCE_TASK
from edgesched.schemas.network import DEFAULT_TIERS
from edgesched.services.jobgraph import (
    build_profile,
    job_from_config,
    parse_job_config,
    predecessors,
    render_job_config,
    successors,
    topological_order,
)
from edgesched.services.templates import attribute_pipeline

SCENARIOS = Path(__file__).resolve().parents[2] / "scenarios"


def job_document(tasks: list[dict], **extra) -> str:
    document = {"job": "j", "source": 0, "input_size": 2, "tasks": tasks}
    return json.dumps({**document, **extra})


def test_parse_fig5_style_document() -> None:
    job = parse_job_config((SCENARIOS / "job-diamond.json").read_text())

    assert job.id == "diamond"
    assert job.total_mem_demand == 6.0
    assert job.task("task2").mem_demand == 2.0
    assert [edge.pair for edge in job.edges] == [
        ("task1", "task2"),
        ("task1", "task3"),
        ("task2", "task4"),
        ("task3", "task4"),
    ]
    assert job.roots == ("task1",)
    assert job.source_edges()[0].volume == 2.0


def test_cycle_is_rejected_naming_a_task_on_it() -> None:
    text = job_document(
        [
            {"id": "a", "downstream": ["b"], "memory_resource": 1},
            {"id": "b", "downstream": ["c"], "memory_resource": 1},
            {"id": "c", "downstream": ["a"], "memory_resource": 1},
        ]
    )

    with pytest.raises(CycleDetectedError) as excinfo:
        parse_job_config(text)

    assert excinfo.value.task_id == "a"


def test_unknown_downstream_task() -> None:
    text = job_document(
        [{"id": "a", "downstream": ["ghost"], "memory_resource": 1}]
    )

    with pytest.raises(UnknownDownstreamTaskError) as excinfo:
        parse_job_config(text)

    assert excinfo.value.downstream == "ghost"


def test_missing_memory_names_the_task() -> None:
    text = job_document([{"id": "a"}, {"id": "b", "memory_resource": 1}])

    with pytest.raises(MissingFieldError) as excinfo:
        parse_job_config(text)

    assert excinfo.value.task_id == "a"
    assert excinfo.value.field == "memory_resource"


def test_invalid_json_is_a_missing_field_error() -> None:
    with pytest.raises(MissingFieldError):
        parse_job_config("{not json")


def test_input_split_must_name_known_tasks() -> None:
    text = job_document(
        [{"id": "a", "memory_resource": 1}], input_split={"zzz": 1.0}
    )

    with pytest.raises(UnknownTaskError):
        parse_job_config(text)


def test_input_split_overrides_root_volume() -> None:
    job = parse_job_config(
        job_document(
            [{"id": "a", "memory_resource": 1}, {"id": "b", "memory_resource": 1}],
            input_split={"b": 0.5},
        )
    )

    volumes = {dep.consumer: dep.volume for dep in job.source_edges()}
    assert volumes == {"a": 2.0, "b": 0.5}
    assert all(dep.producer == SOURCE_TASK for dep in job.source_edges())


def test_memory_request_mismatch_is_logged(caplog: pytest.LogCaptureFixture) -> None:
    text = job_document(
        [{"id": "a", "memory_resource": 1}], total_memory_request=5
    )

    with caplog.at_level(logging.WARNING, logger="edgesched"):
        job = parse_job_config(text)

    assert job.total_memory_request == 5
    assert "total_memory_request" in caplog.text


def test_render_parse_round_trip() -> None:
    job = job_from_config(attribute_pipeline())

    again = parse_job_config(render_job_config(job))

    assert again == job
    assert render_job_config(again) == render_job_config(job)


def test_topological_order_breaks_ties_by_natural_id() -> None:
    job = job_from_config(attribute_pipeline())

    assert topological_order(job) == [f"m{i}" for i in range(1, 11)]


def test_topological_order_respects_every_edge() -> None:
    job = parse_job_config((SCENARIOS / "job-diamond.json").read_text())
    order = topological_order(job)

    assert order == ["task1", "task2", "task3", "task4"]
    for edge in job.edges:
        assert order.index(edge.producer) < order.index(edge.consumer)


def test_predecessors_and_successors() -> None:
    job = job_from_config(attribute_pipeline())

    assert predecessors(job, "m10") == [f"m{i}" for i in range(3, 10)]
    assert successors(job, "m1") == ["m2"]
    assert predecessors(job, "m1") == []
    with pytest.raises(UnknownTaskError):
        successors(job, "m11")


def test_build_profile_divides_workload_by_tier_power() -> None:
    job = job_from_config(attribute_pipeline())

    profile = build_profile(job, DEFAULT_TIERS)

    assert profile.lookup("m2", "raspberry-pi") == pytest.approx(0.8)
    assert profile.lookup("m2", "edge-server-2") == pytest.approx(8 / 320)
    assert len(profile.seconds) == len(job.tasks) * len(DEFAULT_TIERS)
