from __future__ import annotations

import time

import pytest

from edgesched.core.errors import (
    CapacityExceededError,
    EmptyPathSetError,
    InfeasibleFlowError,
    TooLargeError,
)
from edgesched.models import Flow, FlowPlan, Path, Placement
from edgesched.services.allocator import allocate_tasks
from edgesched.services.jrba import (
    allocate_bandwidth,
    build_relaxed_lp,
    closed_form_period,
    commit_plan,
    is_integral,
    jrba,
    oracle_best_plan,
    plan_to_policy,
    release_plan,
    round_routing,
    solve_relaxation,
)
from edgesched.services.lpsolver import solve
from edgesched.services.topology import enumerate_paths, generate_random_network

from .conftest import make_network


def flow(fid: str, src: int, dst: int, volume: float) -> Flow:
    return Flow(fid, src, dst, volume, job="j", dependency=(fid, f"{fid}'"))


@pytest.fixture
def square():
    """Two disjoint two-hop routes from 0 to 3."""
    return make_network(
        [(10.0, 4.0)] * 4,
        [(0, 1, 4.0), (1, 3, 4.0), (0, 2, 4.0), (2, 3, 4.0)],
    )


@pytest.fixture
def motivating_flows(motivating, app_settings):
    _, flows = allocate_tasks(
        motivating.network, motivating.jobs[0], app_settings=app_settings
    )
    return flows


def test_single_route_program(line_network) -> None:
    flows = [flow("f", 0, 2, 5.0)]
    lp, index = build_relaxed_lp(line_network, flows, {"f": [Path((0, 1, 2))]})

    solution = solve(lp)

    assert solution.values[index.th] == pytest.approx(0.5)
    assert solution.values[index.q["f"]] >= 5.0 - 1e-9
    assert lp.num_variables == 3
    assert len(index.links) == 2


def test_split_relaxation_rounds_to_the_first_tied_path(square, app_settings) -> None:
    flows = [flow("f", 0, 3, 2.0)]

    solution, index = solve_relaxation(square, flows, app_settings=app_settings)
    routes = round_routing(solution, index)

    assert solution.values[index.th] == pytest.approx(0.25)
    assert solution.values[list(index.m["f"])] == pytest.approx([1.0, 1.0])
    assert not is_integral(solution, index)
    assert routes == {"f": Path((0, 1, 3))}


def test_jrba_commits_rounded_plan_and_reports_bound(square, app_settings) -> None:
    plan = jrba(square, [flow("f", 0, 3, 2.0)], app_settings=app_settings)

    assert plan.lp_bound == pytest.approx(0.25)
    assert plan.rates == {"f": pytest.approx(4.0)}
    assert plan.period == pytest.approx(0.5)
    assert square.link(0, 1).reservations == {"f": pytest.approx(4.0)}
    assert square.link(0, 2).allocated == 0.0


def test_jrba_without_flows_is_empty(line_network) -> None:
    before = line_network.snapshot()

    plan = jrba(line_network, [])

    assert plan.flows == ()
    assert plan.lp_bound == 0.0
    assert plan.period == 0.0
    assert line_network.snapshot() == before


def test_empty_path_set_is_rejected(line_network) -> None:
    with pytest.raises(EmptyPathSetError) as excinfo:
        build_relaxed_lp(line_network, [flow("f", 0, 2, 1.0)], {})

    assert excinfo.value.flow_id == "f"


def test_saturated_route_is_infeasible(line_network) -> None:
    line_network.link(1, 2).reserve("other", 10.0)

    with pytest.raises(InfeasibleFlowError):
        jrba(line_network, [flow("f", 0, 2, 1.0)])


def test_proportional_share_on_a_shared_route(motivating, motivating_flows) -> None:
    route = Path((3, 1, 0))
    routes = {f.id: route for f in motivating_flows}

    plan = allocate_bandwidth(motivating.network, motivating_flows, routes)

    assert [plan.rates[f.id] for f in motivating_flows] == pytest.approx(
        [20 / 3, 10 / 3]
    )
    assert plan.period == pytest.approx(0.3)
    assert plan.period == pytest.approx(
        closed_form_period(motivating.network, motivating_flows, routes)
    )


def test_equal_share_on_a_shared_route(motivating, motivating_flows) -> None:
    routes = {f.id: Path((3, 1, 0)) for f in motivating_flows}

    plan = allocate_bandwidth(
        motivating.network, motivating_flows, routes, policy="equal"
    )

    assert [plan.rates[f.id] for f in motivating_flows] == pytest.approx([5.0, 5.0])
    assert plan.period == pytest.approx(0.4)


def test_equal_share_takes_the_tightest_link() -> None:
    net = make_network([(1.0, 1.0)] * 3, [(0, 1, 10.0), (1, 2, 12.0)])
    flows = [flow("long", 0, 2, 1.0), flow("b", 1, 2, 1.0), flow("c", 1, 2, 1.0)]
    routes = {
        "long": Path((0, 1, 2)),
        "b": Path((1, 2)),
        "c": Path((1, 2)),
    }

    plan = allocate_bandwidth(net, flows, routes, policy="equal")

    assert plan.rates == {"long": 4.0, "b": 4.0, "c": 4.0}


def test_unknown_share_policy(line_network) -> None:
    with pytest.raises(ValueError):
        allocate_bandwidth(line_network, [], {}, "fair")  # type: ignore[arg-type]


def random_flows(rng, net, count: int, low: float, high: float) -> list[Flow]:
    flows = []
    for index in range(count):
        src, dst = (int(v) for v in rng.choice(net.size, size=2, replace=False))
        flows.append(flow(f"f{index}", src, dst, float(rng.uniform(low, high))))
    return flows


def random_instance(rng, seed: int, max_nodes: int, max_flows: int):
    m = int(rng.integers(3, max_nodes + 1))
    net = generate_random_network(m, min(3.0, m - 1.0), 5.0, 1.0, seed=seed)
    flows = random_flows(rng, net, int(rng.integers(1, max_flows + 1)), 0.5, 3.0)
    return net, flows


def straight_line_period(net, flows, routes) -> float:
    """Slowest per-flow transfer, recomputed link by link from capacities."""
    worst = 0.0
    for f in flows:
        for key in routes[f.id].links:
            crossing = [g.volume for g in flows if key in routes[g.id].links]
            rate = net.link(*key).capacity * f.volume / sum(crossing)
            worst = max(worst, f.volume / rate)
    return worst


def test_proportional_period_matches_closed_form_on_random_instances(rng) -> None:
    elapsed = 0.0
    for seed in range(200):
        net, flows = random_instance(rng, seed, max_nodes=8, max_flows=4)
        routes = {}
        for f in flows:
            candidates = enumerate_paths(net, f.src, f.dst, 3)
            routes[f.id] = candidates[int(rng.integers(0, len(candidates)))]

        started = time.perf_counter()
        plan = allocate_bandwidth(net, flows, routes)
        elapsed += time.perf_counter() - started

        expected = straight_line_period(net, flows, routes)
        assert plan.period == pytest.approx(expected, abs=1e-9)
        assert closed_form_period(net, flows, routes) == pytest.approx(
            expected, abs=1e-9
        )

    assert elapsed < 1.0


def test_motivating_bound_oracle_and_rounding(
    motivating, motivating_flows, app_settings
) -> None:
    net = motivating.network

    best = oracle_best_plan(net, motivating_flows, app_settings=app_settings)
    plan = jrba(net, motivating_flows, app_settings=app_settings)

    assert best.period == pytest.approx(0.2)
    assert best.routes == {
        "motivating:a->b": Path((3, 1, 0)),
        "motivating:a->c": Path((3, 2, 0)),
    }
    assert plan.lp_bound == pytest.approx(3 / 16)
    assert plan.period >= best.period - 1e-9


def test_bound_oracle_and_jrba_are_ordered_on_random_instances(
    rng, app_settings
) -> None:
    integral = 0
    started = time.perf_counter()
    for seed in range(100):
        net, flows = random_instance(rng, seed, max_nodes=8, max_flows=4)
        solution, index = solve_relaxation(net, flows, 3, app_settings=app_settings)

        best = oracle_best_plan(net, flows, 3, app_settings=app_settings)
        plan = jrba(net, flows, 3, app_settings=app_settings)

        slack = 1e-7 * max(1.0, best.period)
        assert plan.lp_bound == pytest.approx(solution.values[index.th])
        assert plan.lp_bound <= best.period + slack
        assert best.period <= plan.period + slack
        if is_integral(solution, index):
            integral += 1
            assert plan.period == pytest.approx(best.period, abs=slack)
        for link in net.links:
            assert link.allocated <= link.capacity + 1e-9

    assert integral > 0
    assert time.perf_counter() - started < 10.0


def test_maxmin_hands_capped_capacity_to_the_other_flows(line_network) -> None:
    flows = [flow("small", 0, 1, 1.0), flow("big", 0, 1, 1.0)]
    routes = {f.id: Path((0, 1)) for f in flows}

    plan = allocate_bandwidth(
        line_network, flows, routes, "maxmin", caps={"small": 2.0}
    )

    assert plan.rates == {"small": pytest.approx(2.0), "big": pytest.approx(8.0)}


def test_maxmin_grows_from_the_floor(line_network) -> None:
    flows = [flow("a", 0, 2, 1.0), flow("b", 1, 2, 3.0)]
    routes = {"a": Path((0, 1, 2)), "b": Path((1, 2))}

    plan = allocate_bandwidth(
        line_network, flows, routes, "maxmin", floor={"a": 6.0, "b": 1.0}
    )

    assert plan.rates["a"] == pytest.approx(6.75)
    assert plan.rates["b"] == pytest.approx(3.25)


def test_maxmin_never_undercuts_proportional_share(rng) -> None:
    for seed in range(50):
        net, flows = random_instance(rng, seed, max_nodes=8, max_flows=4)
        routes = {f.id: enumerate_paths(net, f.src, f.dst, 1)[0] for f in flows}
        caps = {f.id: float(rng.uniform(0.5, 10.0)) for f in flows[::2]}

        proportional = allocate_bandwidth(net, flows, routes)
        filled = allocate_bandwidth(net, flows, routes, "maxmin", caps=caps)

        for f in flows:
            floor = min(proportional.rates[f.id], caps.get(f.id, float("inf")))
            assert filled.rates[f.id] >= floor - 1e-9
            assert filled.rates[f.id] <= caps.get(f.id, float("inf")) + 1e-9
        for link in net.links:
            carried = sum(
                filled.rates[f.id] for f in flows if link.key in routes[f.id].links
            )
            assert carried <= link.capacity + 1e-9


def test_oracle_refuses_large_networks() -> None:
    net = generate_random_network(9, 3.0, 1.0, 0.1, seed=0)

    with pytest.raises(TooLargeError):
        oracle_best_plan(net, [flow("f", 0, 1, 1.0)])


def test_oracle_refuses_many_flows(line_network) -> None:
    flows = [flow(f"f{i}", 0, 2, 1.0) for i in range(5)]

    with pytest.raises(TooLargeError):
        oracle_best_plan(line_network, flows)


def test_release_restores_link_state(motivating, motivating_flows) -> None:
    net = motivating.network
    before = net.snapshot()

    jrba(net, motivating_flows)
    assert net.snapshot() != before
    released = release_plan(net, motivating_flows)

    assert released >= 4
    assert net.snapshot() == before


def test_commit_is_all_or_nothing(line_network) -> None:
    line_network.link(1, 2).reserve("other", 8.0)
    before = line_network.snapshot()
    plan = FlowPlan(
        flows=(flow("f", 0, 2, 1.0),),
        routes={"f": Path((0, 1, 2))},
        rates={"f": 5.0},
    )

    with pytest.raises(CapacityExceededError):
        commit_plan(line_network, plan)

    assert line_network.snapshot() == before


def test_plan_to_policy(square) -> None:
    f = Flow("j:a->b", 0, 3, 2.0, job="j", dependency=("a", "b"))
    plan = allocate_bandwidth(square, [f], {f.id: Path((0, 2, 3))})

    document = plan_to_policy(plan, {"j": Placement("j", {"a": 0, "b": 3})})

    assert document.model_dump() == {
        "jobs": [
            {
                "job": "j",
                "placement": {"a": 0, "b": 3},
                "flows": [
                    {
                        "task": "a",
                        "next_task": "b",
                        "source_node": 0,
                        "next_node": 3,
                        "bandwidth": 4.0,
                        "routing": [0, 2, 3],
                    }
                ],
            }
        ]
    }
