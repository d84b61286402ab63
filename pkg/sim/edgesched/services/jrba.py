from __future__ import annotations

import itertools
import logging
import math
from collections import defaultdict
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass
from typing import Literal

import numpy as np

from ..core.config import Settings, settings
from ..core.errors import (
    CapacityExceededError,
    EmptyPathSetError,
    InfeasibleFlowError,
    SolverError,
    TooLargeError,
)
from ..models.network import Network, Path
from ..models.plan import Flow, FlowPlan, Placement
from ..schemas.policy import FlowPolicy, JobPolicy, PolicyDocument
from .lpsolver import LinearProgram, LpSolution, solve
from .topology import all_simple_paths, enumerate_paths

logger = logging.getLogger(__name__)

SharePolicy = Literal["proportional", "equal", "maxmin"]


@dataclass(frozen=True, slots=True)
class LpIndex:
    """Column layout of the relaxed routing program: [TH, q_i..., m_i^k...]."""

    flows: tuple[Flow, ...]
    paths: Mapping[str, tuple[Path, ...]]
    q: Mapping[str, int]
    m: Mapping[str, tuple[int, ...]]
    links: tuple[tuple[int, int], ...]
    th: int = 0


def build_relaxed_lp(
    net: Network,
    flows: Sequence[Flow],
    pathsets: Mapping[str, Sequence[Path]],
) -> tuple[LinearProgram, LpIndex]:
    """Relaxed joint routing program over residual link capacities.

    With q_i = TH * b_i and m_i^k = q_i * y_i^k the program is linear:
    minimise TH subject to per-link load rows, per-flow path sums and the
    volume lower bounds q_i >= V_i.
    """
    names = ["TH"]
    q: dict[str, int] = {}
    m: dict[str, tuple[int, ...]] = {}
    paths: dict[str, tuple[Path, ...]] = {}
    for flow in flows:
        candidates = tuple(pathsets.get(flow.id, ()))
        if not candidates:
            raise EmptyPathSetError(flow.id)
        paths[flow.id] = candidates
        q[flow.id] = len(names)
        names.append(f"q[{flow.id}]")
    for flow in flows:
        columns = []
        for k in range(len(paths[flow.id])):
            columns.append(len(names))
            names.append(f"m[{flow.id}][{k}]")
        m[flow.id] = tuple(columns)

    users: dict[tuple[int, int], list[int]] = {}
    for flow in flows:
        for column, path in zip(m[flow.id], paths[flow.id]):
            for key in path.links:
                users.setdefault(key, []).append(column)

    objective = np.zeros(len(names))
    objective[0] = 1.0
    lp = LinearProgram.minimize(objective, names)
    for key, columns in users.items():
        row = np.zeros(len(names))
        row[columns] = 1.0
        row[0] = -net.link(*key).residual
        lp.add_le(row, 0.0)
    for flow in flows:
        row = np.zeros(len(names))
        row[list(m[flow.id])] = 1.0
        row[q[flow.id]] = -1.0
        lp.add_eq(row, 0.0)
    bounds = np.zeros(len(names))
    for flow in flows:
        bounds[q[flow.id]] = flow.volume
    lp.lower_bounds = bounds

    index = LpIndex(
        flows=tuple(flows), paths=paths, q=q, m=m, links=tuple(users)
    )
    return lp, index


def _argmax_first(values: np.ndarray, tol: float = 1e-9) -> int:
    best = float(values.max())
    return int(np.flatnonzero(values >= best - tol * max(1.0, abs(best)))[0])


def round_routing(solution: LpSolution, index: LpIndex) -> dict[str, Path]:
    """Route each flow on the path carrying most of its relaxed traffic."""
    routes: dict[str, Path] = {}
    for flow in index.flows:
        share = solution.values[list(index.m[flow.id])]
        routes[flow.id] = index.paths[flow.id][_argmax_first(share)]
    return routes


def is_integral(solution: LpSolution, index: LpIndex, tol: float = 1e-9) -> bool:
    for flow in index.flows:
        share = solution.values[list(index.m[flow.id])]
        scale = max(1.0, float(share.sum()))
        if int(np.count_nonzero(share > tol * scale)) != 1:
            return False
    return True


def closed_form_period(
    net: Network, flows: Sequence[Flow], routes: Mapping[str, Path]
) -> float:
    """max over links of routed volume / residual capacity."""
    load: dict[tuple[int, int], float] = defaultdict(float)
    for flow in flows:
        for key in routes[flow.id].links:
            load[key] += flow.volume
    return max(
        (volume / net.link(*key).residual for key, volume in load.items()),
        default=0.0,
    )


def _progressive_fill(
    net: Network,
    flows: Sequence[Flow],
    routes: Mapping[str, Path],
    caps: Mapping[str, float],
    floor: Mapping[str, float],
) -> dict[str, float]:
    """Grow every unfrozen flow by ``volume * delta`` until a link fills.

    Flows start at ``floor`` and freeze when a link on their route runs out
    of residual or when they reach their cap.
    """
    by_id = {flow.id: flow for flow in flows}
    rates = {flow.id: floor.get(flow.id, 0.0) for flow in flows}
    users: dict[tuple[int, int], list[str]] = defaultdict(list)
    for flow in flows:
        for key in routes[flow.id].links:
            users[key].append(flow.id)
    spare = {
        key: net.link(*key).residual - math.fsum(rates[fid] for fid in members)
        for key, members in users.items()
    }
    active = {fid for fid in rates if rates[fid] < caps.get(fid, math.inf)}

    while active:
        link_steps: dict[tuple[int, int], float] = {}
        for key, members in users.items():
            weight = math.fsum(by_id[fid].volume for fid in members if fid in active)
            if weight > 0:
                link_steps[key] = max(spare[key], 0.0) / weight
        cap_steps = {
            fid: (caps[fid] - rates[fid]) / by_id[fid].volume
            for fid in active
            if math.isfinite(caps.get(fid, math.inf))
        }
        delta = min([*link_steps.values(), *cap_steps.values()])
        bound = delta * (1.0 + 1e-12)

        for fid in active:
            rates[fid] += by_id[fid].volume * delta
        for key, members in users.items():
            grown = math.fsum(by_id[fid].volume for fid in members if fid in active)
            spare[key] -= grown * delta

        frozen = {fid for fid, step in cap_steps.items() if step <= bound}
        for key, step in link_steps.items():
            if step <= bound:
                frozen.update(users[key])
        active -= frozen
    return rates


def allocate_bandwidth(
    net: Network,
    flows: Sequence[Flow],
    routes: Mapping[str, Path],
    policy: SharePolicy = "proportional",
    *,
    caps: Mapping[str, float] | None = None,
    floor: Mapping[str, float] | None = None,
) -> FlowPlan:
    """Rates for fixed routes against current residual capacities.

    ``proportional`` splits each link in proportion to flow volume, which is
    optimal for the period once routes are fixed; ``equal`` splits each link
    evenly among the flows crossing it. ``maxmin`` fills links in proportion
    to volume, starting from ``floor`` and stopping each flow at its entry in
    ``caps``, so capacity a capped flow cannot use goes to the others.
    """
    if policy not in ("proportional", "equal", "maxmin"):
        raise ValueError(f"unknown share policy {policy!r}")
    if policy == "maxmin":
        return FlowPlan(
            flows=tuple(flows),
            routes={flow.id: routes[flow.id] for flow in flows},
            rates=_progressive_fill(net, flows, routes, caps or {}, floor or {}),
        )
    load: dict[tuple[int, int], list[float]] = defaultdict(list)
    for flow in flows:
        for key in routes[flow.id].links:
            load[key].append(flow.volume)

    rates: dict[str, float] = {}
    for flow in flows:
        shares = []
        for key in routes[flow.id].links:
            residual = net.link(*key).residual
            if policy == "proportional":
                shares.append(residual * flow.volume / math.fsum(load[key]))
            else:
                shares.append(residual / len(load[key]))
        rates[flow.id] = min(shares)
    return FlowPlan(
        flows=tuple(flows),
        routes={flow.id: routes[flow.id] for flow in flows},
        rates=rates,
    )


def commit_plan(
    net: Network, plan: FlowPlan, *, app_settings: Settings | None = None
) -> None:
    """Reserve every flow's rate on each link of its route, all or nothing."""
    epsilon = (app_settings or settings).capacity_epsilon
    done: list[tuple[str, tuple[int, int]]] = []
    try:
        for flow in plan.flows:
            for link in net.path_links(plan.routes[flow.id]):
                link.reserve(flow.id, plan.rates[flow.id], epsilon=epsilon)
                done.append((flow.id, link.key))
    except CapacityExceededError:
        for fid, key in reversed(done):
            net.link(*key).release(fid)
        raise


def release_plan(net: Network, flows: Iterable[Flow]) -> int:
    """Drop every link reservation held by ``flows``; returns how many."""
    wanted = {flow.id for flow in flows}
    released = 0
    for link in net.links:
        for fid in [fid for fid in link.reservations if fid in wanted]:
            link.release(fid)
            released += 1
    return released


def _usable_paths(
    net: Network,
    flow: Flow,
    k: int | None,
    exhaustive: bool,
    cfg: Settings,
) -> list[Path]:
    if exhaustive:
        found = all_simple_paths(net, flow.src, flow.dst, app_settings=cfg)
    else:
        found = enumerate_paths(net, flow.src, flow.dst, k, app_settings=cfg)
    usable = [path for path in found if net.bottleneck(path) > cfg.min_link_residual]
    if not usable:
        raise InfeasibleFlowError(flow.id)
    return usable


def solve_relaxation(
    net: Network,
    flows: Sequence[Flow],
    k: int | None = None,
    *,
    exhaustive: bool = False,
    app_settings: Settings | None = None,
) -> tuple[LpSolution, LpIndex]:
    """Build and solve the relaxed program over usable candidate paths."""
    cfg = app_settings or settings
    pathsets = {
        flow.id: _usable_paths(net, flow, k, exhaustive, cfg) for flow in flows
    }
    lp, index = build_relaxed_lp(net, flows, pathsets)
    logger.debug(
        "routing LP: %d flows, %d variables, %d link rows",
        len(flows),
        lp.num_variables,
        len(index.links),
    )
    solution = solve(lp, app_settings=cfg)
    if not solution.is_optimal:
        raise SolverError(
            f"routing LP reported {solution.status.value}", status=solution.status
        )
    return solution, index


def jrba(
    net: Network,
    flows: Sequence[Flow],
    k: int | None = None,
    *,
    exhaustive: bool = False,
    share: SharePolicy = "proportional",
    caps: Mapping[str, float] | None = None,
    commit: bool = True,
    app_settings: Settings | None = None,
) -> FlowPlan:
    """Solve the relaxed routing LP, round routes, share bandwidth, commit.

    The returned plan carries the LP optimum as ``lp_bound``; unless
    ``commit`` is false its rates are already reserved on ``net``.
    """
    cfg = app_settings or settings
    if not flows:
        return FlowPlan(lp_bound=0.0)

    solution, index = solve_relaxation(
        net, flows, k, exhaustive=exhaustive, app_settings=cfg
    )
    routes = round_routing(solution, index)
    plan = allocate_bandwidth(net, flows, routes, share, caps=caps)
    plan.lp_bound = float(solution.values[index.th])
    if commit:
        commit_plan(net, plan, app_settings=cfg)
    return plan


def oracle_best_plan(
    net: Network,
    flows: Sequence[Flow],
    k: int | None = None,
    *,
    app_settings: Settings | None = None,
) -> FlowPlan:
    """Exhaustive search over path combinations; commits nothing.

    With ``k`` unset every simple path is a candidate, otherwise the same
    k-path budget jrba uses.
    """
    cfg = app_settings or settings
    if net.size > cfg.oracle_max_nodes:
        raise TooLargeError("network", net.size, cfg.oracle_max_nodes)
    if len(flows) > cfg.oracle_max_flows:
        raise TooLargeError("flow set", len(flows), cfg.oracle_max_flows)
    if not flows:
        return FlowPlan(lp_bound=0.0)

    pathsets = [
        _usable_paths(net, flow, k, exhaustive=k is None, cfg=cfg) for flow in flows
    ]
    best_routes: dict[str, Path] | None = None
    best_period = math.inf
    for combo in itertools.product(*pathsets):
        routes = {flow.id: path for flow, path in zip(flows, combo)}
        period = closed_form_period(net, flows, routes)
        if period < best_period:
            best_period = period
            best_routes = routes
    assert best_routes is not None
    return allocate_bandwidth(net, flows, best_routes)


def plan_to_policy(
    plan: FlowPlan, placements: Mapping[str, Placement]
) -> PolicyDocument:
    jobs = []
    for job_id, placement in placements.items():
        flows = [
            FlowPolicy(
                task=flow.dependency[0],
                next_task=flow.dependency[1],
                source_node=flow.src,
                next_node=flow.dst,
                bandwidth=plan.rates[flow.id],
                routing=list(plan.routes[flow.id].nodes),
            )
            for flow in plan.flows
            if flow.job == job_id
        ]
        jobs.append(
            JobPolicy(job=job_id, placement=dict(placement.assignment), flows=flows)
        )
    return PolicyDocument(jobs=jobs)
