from __future__ import annotations

from collections import defaultdict

import pytest

from edgesched.core.errors import InvariantViolationError, ScenarioError
from edgesched.models import JobStatus, Network
from edgesched.schemas.network import GeneratorConfig, TierConfig
from edgesched.schemas.scenario import ScenarioConfig, SchedulerName, TemplateRef
from edgesched.services.engine import (
    SimulationEngine,
    audit,
    generate_arrivals,
    run_jobs,
)
from edgesched.services.scenarios import materialise
from edgesched.utils.events import EventLog

from .conftest import make_job, make_network


def two_job_network() -> Network:
    """Only node 0 can host a two-task job."""
    return make_network([(10.0, 2.0), (10.0, 0.5)], [(0, 1, 10.0)])


def relay_network() -> Network:
    """0 - 1 - 2 where only node 2 has memory; every job crosses both links."""
    return make_network(
        [(1.0, 0.5), (1.0, 0.5), (100.0, 10.0)],
        [(0, 1, 10.0), (1, 2, 10.0)],
    )


def relay_job(job_id: str, arrival: float):
    return make_job(
        job_id, [("x", 1.0, 1.0, {})], input_size=10.0, arrival_time=arrival
    )


def small_scenario(scheduler: SchedulerName, seed: int = 3) -> ScenarioConfig:
    return ScenarioConfig(
        name="small",
        seed=seed,
        scheduler=scheduler,
        generator=GeneratorConfig(
            nodes=8,
            avg_degree=3.0,
            bw_mean=2.0,
            bw_var=0.3,
            tiers=[TierConfig(name="box", power=40.0, memory=8.0)],
        ),
        templates=[TemplateRef(template="diamond")],
        n_jobs=12,
        arrival_rate=0.5,
        stream_length=20,
    )


def test_single_job_starts_on_arrival(line_network, chain_job, app_settings) -> None:
    [record] = run_jobs(line_network, [chain_job], "otfs", app_settings=app_settings)

    assert record.status is JobStatus.COMPLETED
    assert record.waiting_time == 0.0
    assert record.finish == pytest.approx(10.0)
    assert record.achieved_throughput == pytest.approx(1.0)


@pytest.mark.parametrize("scheduler", list(SchedulerName))
def test_identical_jobs_serialize_on_the_only_fitting_node(
    scheduler, app_settings
) -> None:
    tasks = [("t1", 10.0, 1.0, {"t2": 1.0}), ("t2", 10.0, 1.0, {})]
    jobs = [make_job("job1", tasks), make_job("job2", tasks)]

    first, second = run_jobs(
        two_job_network(), jobs, scheduler, app_settings=app_settings
    )

    assert first.scheduled == 0.0
    assert second.scheduled == pytest.approx(10.0)
    assert second.waiting_time == pytest.approx(10.0)
    assert second.finish == pytest.approx(20.0)
    assert {first.status, second.status} == {JobStatus.COMPLETED}


def shared_tail_network() -> Network:
    """0 - 1 - 2 with a wider second link; only node 2 has memory."""
    return make_network(
        [(1.0, 0.5), (1.0, 0.5), (100.0, 10.0)],
        [(0, 1, 10.0), (1, 2, 20.0)],
    )


def test_readjust_shares_a_link_with_a_newly_admitted_job(app_settings) -> None:
    late = make_job(
        "B", [("x", 1.0, 1.0, {})], source=1, input_size=30.0, arrival_time=5.0
    )
    log = EventLog()
    engine = SimulationEngine(
        shared_tail_network(),
        [relay_job("A", 0.0), late],
        SchedulerName.OTFA,
        event_log=log,
        app_settings=app_settings,
    )

    first, second = engine.run_to_completion()

    assert first.finish == pytest.approx(15.0)
    assert second.scheduled == 5.0
    assert second.finish == pytest.approx(22.5)
    assert first.throughput_history == [(0.0, 1.0), (5.0, 0.5)]
    assert first.achieved_throughput == pytest.approx(10 / 15)
    assert second.achieved_throughput == pytest.approx(10 / 17.5)
    [replanned, *_] = log.of("replanned")
    assert replanned == {
        "t": 5.0,
        "event": "replanned",
        "job": "A",
        "nodes": {},
        "links": {"0-1": -5.0, "1-2": -5.0},
    }
    assert [entry["links"] for entry in log.of("replanned")[1:]] == [
        {"1-2": 5.0},
        {"1-2": 5.0},
    ]


def test_replanned_is_logged_when_only_the_rate_moves(app_settings) -> None:
    net = make_network([(1.0, 0.5), (1.0, 10.0)], [(0, 1, 10.0)])
    job = make_job("C", [("x", 2.0, 1.0, {})], input_size=10.0)
    log = EventLog()

    [record] = run_jobs(
        net, [job], SchedulerName.OTFA, event_log=log, app_settings=app_settings
    )

    assert record.finish == pytest.approx(20.0)
    assert record.throughput_history == [(0.0, 0.5)]
    assert [entry["links"] for entry in log.of("scheduled")] == [{"0-1": 10.0}]
    assert [entry["links"] for entry in log.of("replanned")] == [{"0-1": -5.0}]
    assert [entry["links"] for entry in log.of("completion")] == [{"0-1": -5.0}]


@pytest.mark.parametrize("scheduler", [SchedulerName.OTFS, SchedulerName.OTFA])
def test_saturated_route_makes_the_new_job_wait(scheduler, app_settings) -> None:
    first, second = run_jobs(
        relay_network(),
        [relay_job("A", 0.0), relay_job("B", 5.0)],
        scheduler,
        app_settings=app_settings,
    )

    assert first.finish == pytest.approx(10.0)
    assert second.waiting_time == pytest.approx(5.0)
    assert second.finish == pytest.approx(20.0)


@pytest.mark.parametrize("scheduler", list(SchedulerName))
def test_run_releases_every_reservation(scheduler, app_settings) -> None:
    scenario = materialise(small_scenario(scheduler), app_settings=app_settings)
    before = scenario.network.snapshot()

    records = run_jobs(
        scenario.network, scenario.jobs, scheduler, app_settings=app_settings
    )

    assert len(records) == 12
    assert all(record.status is JobStatus.COMPLETED for record in records)
    for record in records:
        assert record.finish >= record.scheduled >= record.arrival
    assert scenario.network.snapshot() == before


def test_event_log_is_deterministic(app_settings) -> None:
    dumps = []
    for _ in range(2):
        scenario = materialise(
            small_scenario(SchedulerName.OTFA), app_settings=app_settings
        )
        log = EventLog()
        SimulationEngine(
            scenario.network,
            scenario.jobs,
            SchedulerName.OTFA,
            event_log=log,
            app_settings=app_settings,
        ).run_to_completion()
        dumps.append(log.dumps())

    assert dumps[0] == dumps[1]
    assert dumps[0].count('"event": "arrival"') == 12


def replay(log: EventLog) -> tuple[dict[str, float], dict[str, float]]:
    nodes: dict[str, float] = defaultdict(float)
    links: dict[str, float] = defaultdict(float)
    for entry in log:
        for node, delta in entry["nodes"].items():
            nodes[node] += delta
        for label, delta in entry["links"].items():
            links[label] += delta
    return nodes, links


@pytest.mark.parametrize("scheduler", list(SchedulerName))
def test_event_log_replays_to_the_live_reservations(scheduler, app_settings) -> None:
    scenario = materialise(small_scenario(scheduler), app_settings=app_settings)
    net = scenario.network
    log = EventLog()
    engine = SimulationEngine(
        net, scenario.jobs, scheduler, event_log=log, app_settings=app_settings
    )

    while engine.state.events:
        engine.step()
        nodes, links = replay(log)
        for node in net.nodes:
            assert nodes[str(node.id)] == pytest.approx(node.mem_reserved, abs=1e-4)
        for link in net.links:
            label = f"{link.key[0]}-{link.key[1]}"
            assert links[label] == pytest.approx(link.allocated, abs=1e-4)


def test_readjust_after_a_completion_keeps_the_slowest_job_as_fast(
    app_settings,
) -> None:
    scenario = materialise(
        small_scenario(SchedulerName.OTFA), app_settings=app_settings
    )
    engine = SimulationEngine(
        scenario.network,
        scenario.jobs,
        SchedulerName.OTFA,
        app_settings=app_settings,
    )

    checked = 0
    while engine.state.events:
        before = {job: entry.period for job, entry in engine.state.running.items()}
        engine.step()
        after = {job: entry.period for job, entry in engine.state.running.items()}
        if after and set(after) < set(before):
            slowest = max(before[job] for job in after)
            assert max(after.values()) <= slowest * (1 + 1e-9)
            checked += 1

    assert checked > 0


def test_arrivals_have_the_requested_mean_gap(chain_job) -> None:
    jobs = generate_arrivals([chain_job], 10_000, 0.5, seed=7, source_nodes=3)

    assert jobs[-1].arrival_time / len(jobs) == pytest.approx(2.0, rel=0.05)
    assert jobs[0].id == "chain-0000"
    assert {job.source_node for job in jobs} == {0, 1, 2}
    assert all(a.arrival_time <= b.arrival_time for a, b in zip(jobs, jobs[1:]))


def test_arrivals_need_a_positive_rate(chain_job) -> None:
    with pytest.raises(ValueError):
        generate_arrivals([chain_job], 3, 0.0, seed=1)


def test_no_jobs_no_records(line_network) -> None:
    assert run_jobs(line_network, [], SchedulerName.OTFA) == []


def test_duplicate_job_ids_are_rejected(line_network, chain_job) -> None:
    with pytest.raises(ScenarioError):
        SimulationEngine(line_network, [chain_job, chain_job])


@pytest.mark.parametrize("scheduler", list(SchedulerName))
def test_unplaceable_job_is_marked_failed(
    scheduler, line_network, app_settings
) -> None:
    job = make_job("huge", [("t", 1.0, 100.0, {})])

    [record] = run_jobs(line_network, [job], scheduler, app_settings=app_settings)

    assert record.status is JobStatus.FAILED
    assert record.scheduled is None
    assert record.achieved_throughput == 0.0
    assert all(not node.reservations for node in line_network.nodes)


def test_max_wait_fails_jobs_stuck_in_the_queue(app_settings) -> None:
    tasks = [("t1", 10.0, 1.0, {}), ("t2", 10.0, 1.0, {})]
    jobs = [make_job("job1", tasks), make_job("job2", tasks)]

    first, second = run_jobs(
        two_job_network(),
        jobs,
        SchedulerName.LR,
        max_wait_seconds=3.0,
        app_settings=app_settings,
    )

    assert first.status is JobStatus.COMPLETED
    assert second.status is JobStatus.FAILED
    assert second.finish == pytest.approx(10.0)
    assert second.waiting_time == pytest.approx(10.0)


def test_audit_flags_stray_link_reservations(line_network, chain_job) -> None:
    engine = SimulationEngine(line_network, [chain_job])
    line_network.link(0, 1).reserve("ghost", 1.0)

    with pytest.raises(InvariantViolationError):
        audit(engine.state, line_network)


def test_step_processes_one_instant(line_network, chain_job, app_settings) -> None:
    later = make_job(
        "late", [("t1", 1.0, 1.0, {})], arrival_time=3.0, stream_length=1
    )
    engine = SimulationEngine(
        line_network, [chain_job, later], "otfs", app_settings=app_settings
    )

    processed = engine.step()

    assert [event[4] for event in processed] == ["chain"]
    assert engine.state.clock == 0.0
    assert "chain" in engine.state.running
    assert engine.step()[0][4] == "late"
    assert engine.state.clock == 3.0
