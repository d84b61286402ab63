from .job import SOURCE_TASK, Dependency, Job, JobProfile, Task
from .network import EdgeNode, Link, Network, Path, link_key
from .plan import Flow, FlowPlan, PeriodBreakdown, Placement, flow_id
from .state import EventKind, JobRecord, JobStatus, RunningJob, SchedulerState

__all__ = [
    "SOURCE_TASK",
    "Dependency",
    "EdgeNode",
    "EventKind",
    "Flow",
    "FlowPlan",
    "Job",
    "JobProfile",
    "JobRecord",
    "JobStatus",
    "Link",
    "Network",
    "Path",
    "PeriodBreakdown",
    "Placement",
    "RunningJob",
    "SchedulerState",
    "Task",
    "flow_id",
    "link_key",
]
