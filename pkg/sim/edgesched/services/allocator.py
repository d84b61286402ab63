from __future__ import annotations

import logging
import math
from collections.abc import Mapping

from ..core.config import Settings, settings
from ..core.errors import InsufficientResourcesError
from ..models.job import SOURCE_TASK, Job
from ..models.network import Network
from ..models.plan import Flow, Placement, flow_id
from .jobgraph import topological_order
from .topology import average_route_bandwidth

logger = logging.getLogger(__name__)


def derive_flows(job: Job, assignment: Mapping[str, int]) -> list[Flow]:
    """One flow per cross-node, positive-volume dependency; source edges first."""
    flows: list[Flow] = []
    for dep in job.dependencies():
        if dep.volume <= 0:
            continue
        src = job.source_node if dep.from_source else assignment[dep.producer]
        dst = assignment[dep.consumer]
        if src == dst:
            continue
        flows.append(
            Flow(
                id=flow_id(job.id, dep.producer, dep.consumer),
                src=src,
                dst=dst,
                volume=dep.volume,
                job=job.id,
                dependency=dep.pair,
            )
        )
    return flows


def rollback(net: Network, placement: Placement) -> None:
    """Return every memory reservation the placement holds."""
    for task_id, node_id in placement.assignment.items():
        net.node(node_id).release((placement.job_id, task_id))


class _BandwidthEstimate:
    """Average residual bandwidth over the k candidate routes, cached per pair."""

    def __init__(self, net: Network, k: int, app_settings: Settings) -> None:
        self._net = net
        self._k = k
        self._settings = app_settings
        self._cache: dict[tuple[int, int], float] = {}

    def __call__(self, src: int, dst: int) -> float:
        key = (src, dst) if src <= dst else (dst, src)
        if key not in self._cache:
            self._cache[key] = average_route_bandwidth(
                self._net, src, dst, self._k, app_settings=self._settings
            )
        return self._cache[key]


def allocate_tasks(
    net: Network,
    job: Job,
    k: int | None = None,
    *,
    app_settings: Settings | None = None,
) -> tuple[Placement, list[Flow]]:
    """Greedy placement: each task goes to the node minimising compute plus
    inbound transfer time, in topological order.

    Transfer time to an already-placed producer uses the average residual
    bandwidth of the links on the k candidate routes between the two nodes.
    Ties go to the node with more free memory, then the lower id.
    """
    cfg = app_settings or settings
    budget = k if k is not None else cfg.k_paths
    estimate = _BandwidthEstimate(net, budget, cfg)
    placement = Placement(job_id=job.id, assignment={})

    for task_id in topological_order(job):
        task = job.task(task_id)
        inbound = job.inbound(task_id)
        best: tuple[float, float, int] | None = None
        for node in net.nodes:
            if node.mem_available < task.mem_demand:
                continue
            t_comm = 0.0
            for dep in inbound:
                producer_node = (
                    job.source_node
                    if dep.producer == SOURCE_TASK
                    else placement.assignment[dep.producer]
                )
                if producer_node == node.id or dep.volume == 0:
                    continue
                bandwidth = estimate(producer_node, node.id)
                t_comm = max(
                    t_comm, dep.volume / bandwidth if bandwidth > 0 else math.inf
                )
            t_exec = task.workload / node.compute_power + t_comm
            candidate = (t_exec, -node.mem_available, node.id)
            if best is None or candidate < best:
                best = candidate
        if best is None:
            rollback(net, placement)
            logger.debug("job %s: no node fits task %s", job.id, task_id)
            raise InsufficientResourcesError(job.id, task_id)
        chosen = best[2]
        net.node(chosen).reserve((job.id, task_id), task.mem_demand)
        placement.assignment[task_id] = chosen

    flows = derive_flows(job, placement.assignment)
    logger.debug(
        "job %s placed on %s with %d flows",
        job.id,
        sorted(set(placement.assignment.values())),
        len(flows),
    )
    return placement, flows
