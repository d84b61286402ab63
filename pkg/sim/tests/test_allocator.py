from __future__ import annotations

import pytest

from edgesched.core.errors import InsufficientResourcesError, ReservationError
from edgesched.models import Flow
from edgesched.services.allocator import allocate_tasks, derive_flows, rollback

from .conftest import make_job, make_network


def test_motivating_placement_splits_the_job(motivating, app_settings) -> None:
    net = motivating.network
    job = motivating.jobs[0]

    placement, flows = allocate_tasks(net, job, app_settings=app_settings)

    assert placement.assignment == {
        "a": 3,
        "b": 0,
        "c": 0,
        "d": 0,
        "e": 0,
        "f": 0,
    }
    assert flows == [
        Flow("motivating:a->b", 3, 0, 2.0, "motivating", ("a", "b")),
        Flow("motivating:a->c", 3, 0, 1.0, "motivating", ("a", "c")),
    ]
    assert net.node(3).mem_available == 1.0
    assert net.node(0).mem_available == 4.0


def test_co_located_job_has_no_flows(line_network, chain_job) -> None:
    placement, flows = allocate_tasks(line_network, chain_job)

    assert placement.assignment == {"t1": 0, "t2": 0}
    assert flows == []


@pytest.mark.parametrize(("input_size", "expected"), [(1.0, 1), (20.0, 0)])
def test_fast_remote_node_wins_only_when_transfer_is_cheap(
    input_size, expected
) -> None:
    net = make_network([(1.0, 4.0), (100.0, 4.0)], [(0, 1, 1.0)])
    job = make_job("j", [("a", 10.0, 1.0, {})], input_size=input_size)

    placement, _ = allocate_tasks(net, job)

    assert placement.node_of("a") == expected


@pytest.mark.parametrize(("memories", "expected"), [((4.0, 6.0), 2), ((5.0, 5.0), 1)])
def test_ties_go_to_free_memory_then_lower_id(memories, expected) -> None:
    net = make_network(
        [(10.0, 0.5), (10.0, memories[0]), (10.0, memories[1])],
        [(0, 1, 10.0), (0, 2, 10.0)],
    )
    job = make_job("j", [("a", 10.0, 1.0, {})])

    placement, flows = allocate_tasks(net, job)

    assert placement.node_of("a") == expected
    assert [flow.dst for flow in flows] == [expected]


def test_no_fitting_node_rolls_back_and_names_the_task(line_network) -> None:
    job = make_job(
        "big",
        [("small", 1.0, 1.0, {"huge": 1.0}), ("huge", 1.0, 100.0, {})],
    )
    before = line_network.snapshot()

    with pytest.raises(InsufficientResourcesError) as excinfo:
        allocate_tasks(line_network, job)

    assert excinfo.value.job_id == "big"
    assert excinfo.value.task_id == "huge"
    assert line_network.snapshot() == before


def test_rollback_restores_memory_and_refuses_a_second_call(
    motivating, app_settings
) -> None:
    net = motivating.network
    before = net.snapshot()
    placement, _ = allocate_tasks(net, motivating.jobs[0], app_settings=app_settings)

    rollback(net, placement)

    assert net.snapshot() == before
    with pytest.raises(ReservationError):
        rollback(net, placement)


def test_placement_never_overcommits_memory(rng) -> None:
    net = make_network(
        [(float(rng.uniform(5, 50)), 3.0) for _ in range(4)],
        [(0, 1, 2.0), (1, 2, 3.0), (2, 3, 4.0), (3, 0, 5.0)],
    )
    placed = 0
    for index in range(20):
        job = make_job(
            f"j{index}",
            [("a", 5.0, 1.0, {"b": 1.0}), ("b", 5.0, 1.0, {})],
            source=index % 4,
        )
        try:
            allocate_tasks(net, job)
        except InsufficientResourcesError:
            continue
        placed += 1
        assert all(node.mem_available >= 0 for node in net.nodes)

    assert placed == 6
    assert all(node.mem_available < 2.0 for node in net.nodes)


def test_derive_flows_skips_empty_and_local_edges(chain_job) -> None:
    job = make_job(
        "j",
        [
            ("a", 1.0, 1.0, {"b": 0.0, "c": 3.0}),
            ("b", 1.0, 1.0, {}),
            ("c", 1.0, 1.0, {}),
        ],
    )

    flows = derive_flows(job, {"a": 0, "b": 1, "c": 2})

    assert [flow.id for flow in flows] == ["j:a->c"]
    assert derive_flows(chain_job, {"t1": 1, "t2": 1})[0].id == (
        "chain:__source__->t1"
    )
