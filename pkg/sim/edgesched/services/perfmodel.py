from __future__ import annotations

from collections.abc import Mapping

from ..core.errors import ZeroRateError
from ..models.job import SOURCE_TASK, Job, Task
from ..models.network import EdgeNode, Network
from ..models.plan import PeriodBreakdown, Placement, flow_id


def compute_time(task: Task, node: EdgeNode) -> float:
    return task.workload / node.compute_power


def comm_time(volume: float, rate: float, *, flow: str | None = None) -> float:
    if volume == 0:
        return 0.0
    if rate <= 0:
        raise ZeroRateError(volume, flow)
    return volume / rate


def node_of(job: Job, placement: Placement, task_id: str) -> int:
    if task_id == SOURCE_TASK:
        return job.source_node
    return placement.assignment[task_id]


def compute_period(net: Network, job: Job, placement: Placement) -> float:
    """Slowest task on its node; the period no bandwidth can go below."""
    return max(
        (
            compute_time(task, net.node(placement.assignment[task.id]))
            for task in job.tasks
        ),
        default=0.0,
    )


def job_period(
    net: Network,
    job: Job,
    placement: Placement,
    flow_rates: Mapping[str, float],
) -> PeriodBreakdown:
    """Pipeline period: the slowest task or cross-node transfer.

    Co-located dependencies contribute nothing; compute power is not divided
    among co-located tasks.
    """
    compute = {
        task.id: compute_time(task, net.node(placement.assignment[task.id]))
        for task in job.tasks
    }
    comm: dict[tuple[str, str], float] = {}
    for dep in job.dependencies():
        if node_of(job, placement, dep.producer) == node_of(
            job, placement, dep.consumer
        ):
            continue
        fid = flow_id(job.id, dep.producer, dep.consumer)
        comm[dep.pair] = comm_time(dep.volume, flow_rates.get(fid, 0.0), flow=fid)
    period = max([*compute.values(), *comm.values()], default=0.0)
    return PeriodBreakdown(compute_times=compute, comm_times=comm, period=period)
