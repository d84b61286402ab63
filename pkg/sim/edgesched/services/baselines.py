from __future__ import annotations

import logging
from collections.abc import Sequence

import numpy as np

from ..core.config import Settings, settings
from ..core.errors import (
    EdgeSchedError,
    InfeasibleFlowError,
    InsufficientResourcesError,
)
from ..models.job import Job
from ..models.network import Network
from ..models.plan import Flow, FlowPlan, Placement
from .allocator import allocate_tasks, derive_flows, rollback
from .jrba import allocate_bandwidth, commit_plan
from .topology import enumerate_paths

logger = logging.getLogger(__name__)


def _place_whole(
    net: Network, job: Job, node_id: int
) -> tuple[Placement, list[Flow]]:
    node = net.node(node_id)
    placement = Placement(job_id=job.id, assignment={})
    for task in job.tasks:
        node.reserve((job.id, task.id), task.mem_demand)
        placement.assignment[task.id] = node_id
    return placement, derive_flows(job, placement.assignment)


def _fitting_nodes(net: Network, job: Job) -> list[int]:
    demand = job.total_mem_demand
    fitting = [node.id for node in net.nodes if node.mem_available >= demand]
    if not fitting:
        raise InsufficientResourcesError(job.id)
    return fitting


def place_least_request(net: Network, job: Job) -> tuple[Placement, list[Flow]]:
    """Whole job on the node with the most free memory (lower id on ties)."""
    fitting = _fitting_nodes(net, job)
    chosen = min(
        fitting, key=lambda node_id: (-net.node(node_id).mem_available, node_id)
    )
    return _place_whole(net, job, chosen)


def _utilisation(net: Network, extra: dict[int, float]) -> np.ndarray:
    return np.array(
        [
            (node.mem_capacity - node.mem_available + extra.get(node.id, 0.0))
            / node.mem_capacity
            if node.mem_capacity > 0
            else 0.0
            for node in net.nodes
        ]
    )


def place_balanced(net: Network, job: Job) -> tuple[Placement, list[Flow]]:
    """Whole job on the node leaving memory utilisation most even."""
    demand = job.total_mem_demand
    fitting = _fitting_nodes(net, job)
    chosen = min(
        fitting,
        key=lambda node_id: (
            float(np.std(_utilisation(net, {node_id: demand}))),
            node_id,
        ),
    )
    return _place_whole(net, job, chosen)


def equal_share_plan(
    net: Network,
    flows: Sequence[Flow],
    *,
    app_settings: Settings | None = None,
) -> FlowPlan:
    """Hop-shortest route per flow, link residual split evenly; committed."""
    cfg = app_settings or settings
    routes = {}
    for flow in flows:
        path = enumerate_paths(net, flow.src, flow.dst, 1, app_settings=cfg)[0]
        if net.bottleneck(path) <= cfg.min_link_residual:
            raise InfeasibleFlowError(flow.id)
        routes[flow.id] = path
    plan = allocate_bandwidth(net, flows, routes, policy="equal")
    commit_plan(net, plan, app_settings=cfg)
    return plan


def schedule_tp(
    net: Network,
    job: Job,
    k: int | None = None,
    *,
    app_settings: Settings | None = None,
) -> tuple[Placement, FlowPlan]:
    placement, flows = allocate_tasks(net, job, k, app_settings=app_settings)
    try:
        plan = equal_share_plan(net, flows, app_settings=app_settings)
    except EdgeSchedError:
        rollback(net, placement)
        raise
    return placement, plan
