from __future__ import annotations

from typing import Any


class EdgeSchedError(Exception):
    """Base class for every failure surfaced by the scheduler and simulator.

    ``code`` is a stable, machine-parsable name; keyword context (the offending
    element) is kept on the instance so callers can react without parsing the
    message.
    """

    code = "EdgeSchedError"

    def __init__(self, message: str, **context: Any) -> None:
        self.context = context
        for key, value in context.items():
            setattr(self, key, value)
        super().__init__(message)


# topology


class NetworkValidationError(EdgeSchedError):
    code = "InvalidNetwork"


class DisconnectedError(NetworkValidationError):
    code = "Disconnected"

    def __init__(self, node_id: int) -> None:
        super().__init__(
            f"Node {node_id} is not reachable from node 0", node_id=node_id
        )


class DuplicateLinkError(NetworkValidationError):
    code = "DuplicateLink"

    def __init__(self, u: int, v: int) -> None:
        super().__init__(f"More than one link joins nodes {u} and {v}", u=u, v=v)


class SelfLoopError(DuplicateLinkError):
    code = "SelfLoop"

    def __init__(self, u: int, v: int) -> None:
        EdgeSchedError.__init__(
            self, f"Link ({u},{v}) joins a node to itself", u=u, v=v
        )


class NonPositiveCapacityError(NetworkValidationError):
    code = "NonPositiveCapacity"

    def __init__(self, element: str, value: float) -> None:
        super().__init__(
            f"{element} has non-positive capacity {value}",
            element=element,
            value=value,
        )


class InvalidNodeError(NetworkValidationError):
    code = "InvalidNode"

    def __init__(self, node_id: int, reason: str) -> None:
        super().__init__(f"Node {node_id}: {reason}", node_id=node_id, reason=reason)


class NoPathError(EdgeSchedError):
    code = "NoPath"

    def __init__(self, src: int, dst: int) -> None:
        super().__init__(f"No path from node {src} to node {dst}", src=src, dst=dst)


class TooLargeError(EdgeSchedError):
    code = "TooLarge"

    def __init__(self, what: str, size: int, limit: int) -> None:
        super().__init__(
            f"{what} size {size} exceeds the exhaustive-search cap {limit}",
            what=what,
            size=size,
            limit=limit,
        )


class InfeasibleDegreeError(EdgeSchedError):
    code = "InfeasibleDegree"

    def __init__(self, nodes: int, avg_degree: float) -> None:
        super().__init__(
            f"Average degree {avg_degree} is not reachable with {nodes} nodes",
            nodes=nodes,
            avg_degree=avg_degree,
        )


# jobgraph


class JobConfigError(EdgeSchedError):
    code = "InvalidJob"


class CycleDetectedError(JobConfigError):
    code = "CycleDetected"

    def __init__(self, task_id: str) -> None:
        super().__init__(f"Task {task_id} lies on a dependency cycle", task_id=task_id)


class UnknownDownstreamTaskError(JobConfigError):
    code = "UnknownDownstreamTask"

    def __init__(self, task_id: str, downstream: str) -> None:
        super().__init__(
            f"Task {task_id} lists unknown downstream task {downstream}",
            task_id=task_id,
            downstream=downstream,
        )


class MissingFieldError(JobConfigError):
    code = "MissingField"

    def __init__(self, task_id: str | None, field: str) -> None:
        owner = f"task {task_id}" if task_id is not None else "job"
        super().__init__(
            f"Missing or invalid field {field!r} in {owner}",
            task_id=task_id,
            field=field,
        )


class UnknownTaskError(JobConfigError):
    code = "UnknownTask"

    def __init__(self, task_id: str) -> None:
        super().__init__(f"Unknown task {task_id}", task_id=task_id)


# perfmodel


class ZeroRateError(EdgeSchedError):
    code = "ZeroRate"

    def __init__(self, volume: float, flow_id: str | None = None) -> None:
        target = f"flow {flow_id}" if flow_id else "transfer"
        super().__init__(
            f"{target} carries {volume} data units at zero rate",
            volume=volume,
            flow_id=flow_id,
        )


# lpsolver


class MalformedProgramError(EdgeSchedError):
    code = "MalformedProgram"


class SolverError(EdgeSchedError):
    code = "SolverError"


# allocator / baselines


class InsufficientResourcesError(EdgeSchedError):
    code = "InsufficientResources"

    def __init__(self, job_id: str, task_id: str | None = None) -> None:
        what = f"task {task_id} of job {job_id}" if task_id else f"job {job_id}"
        super().__init__(
            f"No node has enough available memory for {what}",
            job_id=job_id,
            task_id=task_id,
        )


class ReservationError(EdgeSchedError):
    code = "ReservationError"


# jrba


class EmptyPathSetError(EdgeSchedError):
    code = "EmptyPathSet"

    def __init__(self, flow_id: str) -> None:
        super().__init__(f"Flow {flow_id} has no candidate path", flow_id=flow_id)


class InfeasibleFlowError(EdgeSchedError):
    code = "Infeasible"

    def __init__(self, flow_id: str) -> None:
        super().__init__(
            f"Flow {flow_id} has no path with positive residual capacity",
            flow_id=flow_id,
        )


class CapacityExceededError(EdgeSchedError):
    code = "CapacityExceeded"

    def __init__(self, link: tuple[int, int], allocated: float, capacity: float):
        super().__init__(
            f"Link {link} would carry {allocated} over capacity {capacity}",
            link=link,
            allocated=allocated,
            capacity=capacity,
        )


# engine / harness


class InvariantViolationError(EdgeSchedError):
    code = "InvariantViolation"


class EmptyRecordSetError(EdgeSchedError):
    code = "EmptyRecordSet"

    def __init__(self) -> None:
        super().__init__("Cannot compute metrics over zero job records")


class ScenarioError(EdgeSchedError):
    code = "InvalidScenario"
