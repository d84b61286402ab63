from __future__ import annotations

import logging
import math
from collections import defaultdict
from collections.abc import Callable, Iterable, Sequence

import numpy as np

from ..core.config import Settings, settings
from ..core.errors import (
    InfeasibleFlowError,
    InsufficientResourcesError,
    InvariantViolationError,
    ScenarioError,
)
from ..models.job import Job
from ..models.network import Network
from ..models.plan import FlowPlan, Placement
from ..models.state import (
    EventKind,
    JobRecord,
    RunningJob,
    SchedulerState,
)
from ..schemas.policy import PolicyDocument
from ..schemas.scenario import SchedulerName
from ..utils.events import EventLog, EventName
from .allocator import allocate_tasks, rollback
from .baselines import (
    equal_share_plan,
    place_balanced,
    place_least_request,
    schedule_tp,
)
from .jobgraph import task_sort_key
from .jrba import (
    allocate_bandwidth,
    commit_plan,
    jrba,
    plan_to_policy,
    release_plan,
)
from .perfmodel import compute_period, job_period

logger = logging.getLogger(__name__)

Event = tuple[float, int, int, int, str]


def generate_arrivals(
    templates: Sequence[Job],
    n_jobs: int,
    rate: float,
    seed: int | None,
    *,
    source_nodes: int | None = None,
    stream_length: int | None = None,
) -> list[Job]:
    """Poisson arrivals: exponential inter-arrival times with mean 1/rate.

    Templates are cycled in order; when ``source_nodes`` is given each job's
    source node is drawn uniformly from ``range(source_nodes)``.
    """
    if rate <= 0:
        raise ValueError("arrival rate must be positive")
    if n_jobs and not templates:
        raise ValueError("at least one job template is required")
    rng = np.random.default_rng(seed)
    gaps = rng.exponential(1.0 / rate, size=n_jobs)
    times = np.cumsum(gaps)
    width = len(str(max(n_jobs - 1, 0)))
    jobs = []
    for index, arrival in enumerate(times):
        template = templates[index % len(templates)]
        changes: dict[str, int] = {}
        if source_nodes is not None:
            changes["source_node"] = int(rng.integers(0, source_nodes))
        if stream_length is not None:
            changes["stream_length"] = stream_length
        jobs.append(
            template.with_arrival(
                f"{template.id}-{index:0{width}d}", float(arrival), **changes
            )
        )
    return jobs


def _job_links(running: RunningJob) -> dict[tuple[int, int], float]:
    totals: dict[tuple[int, int], float] = defaultdict(float)
    for flow in running.flows:
        for key in running.routes[flow.id].links:
            totals[key] += running.rates[flow.id]
    return dict(totals)


def _job_nodes(job: Job, placement: Placement) -> dict[int, float]:
    totals: dict[int, float] = defaultdict(float)
    for task_id, node_id in placement.assignment.items():
        totals[node_id] += job.task(task_id).mem_demand
    return dict(totals)


def audit(state: SchedulerState, net: Network, epsilon: float = 1e-9) -> None:
    """Check conservation and accounting at an event boundary."""
    flows = state.flows_running
    owner: dict[str, str] = {}
    for job_id, running in state.running.items():
        for flow in running.flows:
            if flow.id in owner:
                raise InvariantViolationError(
                    f"flow {flow.id} is owned by {owner[flow.id]} and {job_id}"
                )
            owner[flow.id] = job_id
        record = state.records[job_id]
        if not running.finish >= running.start >= record.arrival:
            raise InvariantViolationError(
                f"job {job_id} has arrival {record.arrival}, start "
                f"{running.start}, finish {running.finish}"
            )

    expected: dict[tuple[int, int], dict[str, float]] = defaultdict(dict)
    for running in state.running.values():
        for flow in running.flows:
            for key in running.routes[flow.id].links:
                expected[key][flow.id] = running.rates[flow.id]

    for link in net.links:
        if link.allocated > link.capacity + epsilon:
            raise InvariantViolationError(
                f"link {link.key} carries {link.allocated} over {link.capacity}"
            )
        stray = set(link.reservations) - set(flows)
        if stray:
            raise InvariantViolationError(
                f"link {link.key} holds reservations of idle flows {sorted(stray)}"
            )
        if link.reservations != expected.get(link.key, {}):
            raise InvariantViolationError(
                f"link {link.key} reservations disagree with running flow rates"
            )

    for node in net.nodes:
        if node.mem_reserved > node.base_available + epsilon:
            raise InvariantViolationError(
                f"node {node.id} reserves {node.mem_reserved} of "
                f"{node.base_available} available"
            )


class SimulationEngine:
    """Event-driven online scheduler over one network and one job set.

    Each call to :meth:`step` processes every event sharing the earliest
    timestamp: completions release memory and bandwidth, arrivals join the
    waiting queue, then the configured policy schedules waiting jobs in
    order of descending waiting time.

    ``otfa`` admits jobs as ``otfs`` does and then, whenever the set of
    running jobs has changed, re-routes every running flow against full
    link capacities. The re-solve is kept only if its slowest job is no
    slower than the slowest job of the current plan; otherwise the current
    routes stay and the spare capacity is filled.
    """

    def __init__(
        self,
        network: Network,
        jobs: Iterable[Job],
        scheduler: SchedulerName | str = SchedulerName.OTFA,
        *,
        k: int | None = None,
        seed: int | None = None,
        event_log: EventLog | None = None,
        max_wait_seconds: float | None = None,
        app_settings: Settings | None = None,
    ) -> None:
        self.settings = app_settings or settings
        self.net = network
        self.scheduler = SchedulerName(scheduler)
        self.k = k
        self.log = event_log
        self.max_wait = (
            max_wait_seconds
            if max_wait_seconds is not None
            else self.settings.max_wait_seconds
        )
        self.state = SchedulerState(seed=seed)
        self.plans: dict[str, tuple[Placement, FlowPlan]] = {}
        self._planned: frozenset[str] = frozenset()

        jobs = list(jobs)
        ids = [job.id for job in jobs]
        if len(set(ids)) != len(ids):
            raise ScenarioError("job ids must be unique", job_ids=ids)
        for rank, job_id in enumerate(sorted(ids, key=task_sort_key)):
            self.state.order[job_id] = rank
        for job in jobs:
            self.state.pending[job.id] = job
            self.state.records[job.id] = JobRecord(
                job_id=job.id,
                arrival=job.arrival_time,
                stream_length=job.stream_length,
            )
            self.state.push(job.arrival_time, EventKind.ARRIVAL, job.id)

    # transitions

    def _emit(
        self,
        t: float,
        event: EventName,
        job_id: str,
        nodes: dict[int, float] | None = None,
        links: dict[tuple[int, int], float] | None = None,
    ) -> None:
        if self.log is not None:
            self.log.record(t, event, job_id, nodes, links)

    def _complete(self, running: RunningJob, now: float) -> None:
        job = running.job
        release_plan(self.net, running.flows)
        rollback(self.net, running.placement)
        del self.state.running[job.id]
        self.state.records[job.id].mark_completed(now)
        self._emit(
            now,
            "completion",
            job.id,
            {node: -mem for node, mem in _job_nodes(job, running.placement).items()},
            {key: -rate for key, rate in _job_links(running).items()},
        )
        logger.debug("t=%.6f job %s completed", now, job.id)

    def _fail(self, job: Job, now: float, reason: str) -> None:
        self.state.waiting.remove(job)
        self.state.records[job.id].mark_failed(now)
        self._emit(now, "failed", job.id)
        logger.warning("job %s failed at t=%.6f: %s", job.id, now, reason)

    def _start(
        self, job: Job, placement: Placement, plan: FlowPlan, now: float
    ) -> RunningJob:
        record = self.state.records[job.id]
        period = job_period(self.net, job, placement, plan.rates).period
        running = RunningJob(
            job=job,
            placement=placement,
            flows=plan.flows,
            rates=dict(plan.rates),
            period=period,
            start=now,
            finish=now + record.remaining_batches * period,
            last_update=now,
            routes=dict(plan.routes),
        )
        self.state.running[job.id] = running
        self.plans[job.id] = (placement, plan)
        record.mark_scheduled(now, math.inf if period == 0 else 1.0 / period)
        self.state.push(running.finish, EventKind.COMPLETION, job.id, running.version)
        self._emit(
            now,
            "scheduled",
            job.id,
            _job_nodes(job, placement),
            _job_links(running),
        )
        logger.debug(
            "t=%.6f job %s scheduled, period %.6f, finish %.6f",
            now,
            job.id,
            period,
            running.finish,
        )
        return running

    def _ordered_waiting(self) -> list[Job]:
        # Longest-waiting first is earliest arrival first.
        return sorted(
            self.state.waiting,
            key=lambda job: (job.arrival_time, self.state.order[job.id]),
        )

    def _place_and_route(self, job: Job) -> tuple[Placement, FlowPlan]:
        if self.scheduler is SchedulerName.TP:
            return schedule_tp(self.net, job, self.k, app_settings=self.settings)
        if self.scheduler is SchedulerName.LR:
            placement, flows = place_least_request(self.net, job)
        elif self.scheduler is SchedulerName.BR:
            placement, flows = place_balanced(self.net, job)
        else:
            placement, flows = allocate_tasks(
                self.net, job, self.k, app_settings=self.settings
            )
        try:
            if self.scheduler in (SchedulerName.LR, SchedulerName.BR):
                plan = equal_share_plan(self.net, flows, app_settings=self.settings)
            else:
                plan = jrba(self.net, flows, self.k, app_settings=self.settings)
        except InfeasibleFlowError:
            rollback(self.net, placement)
            raise
        return placement, plan

    def policy_document(self) -> PolicyDocument:
        """Placement, routes and rates each job last ran with."""
        plans = [plan for _, plan in self.plans.values()]
        merged = FlowPlan(
            flows=tuple(flow for plan in plans for flow in plan.flows),
            routes={fid: path for plan in plans for fid, path in plan.routes.items()},
            rates={fid: rate for plan in plans for fid, rate in plan.rates.items()},
        )
        placements = {job_id: entry[0] for job_id, entry in self.plans.items()}
        return plan_to_policy(merged, placements)

    # policies

    def _admit(self, now: float) -> list[str]:
        started = []
        for job in self._ordered_waiting():
            try:
                placement, plan = self._place_and_route(job)
            except (InsufficientResourcesError, InfeasibleFlowError):
                continue
            self.state.waiting.remove(job)
            self._start(job, placement, plan, now)
            started.append(job.id)
        return started

    def _schedule_sequential(self, now: float) -> None:
        self._admit(now)

    def _rate_caps(self, running: Sequence[RunningJob]) -> dict[str, float]:
        # A flow faster than volume / compute period no longer shortens its job.
        caps: dict[str, float] = {}
        for entry in running:
            floor = compute_period(self.net, entry.job, entry.placement)
            for flow in entry.flows:
                caps[flow.id] = flow.volume / floor if floor > 0 else math.inf
        return caps

    def _worst_period(
        self, running: Sequence[RunningJob], rates: dict[str, float]
    ) -> float:
        return max(
            job_period(self.net, entry.job, entry.placement, rates).period
            for entry in running
        )

    def _schedule_readjust(self, now: float) -> None:
        self._admit(now)
        current = frozenset(self.state.running)
        if current == self._planned:
            return
        self._planned = current
        running = list(self.state.running.values())
        flows = [flow for entry in running for flow in entry.flows]
        if not flows:
            return

        for entry in running:
            entry.advance(now, self.state.records[entry.job.id])
        previous = {entry.job.id: _job_links(entry) for entry in running}
        routes = {fid: path for e in running for fid, path in e.routes.items()}
        rates = {fid: rate for e in running for fid, rate in e.rates.items()}
        limit = max(entry.period for entry in running)
        caps = self._rate_caps(running)

        release_plan(self.net, flows)
        try:
            plan = jrba(
                self.net,
                flows,
                self.k,
                share="maxmin",
                caps=caps,
                commit=False,
                app_settings=self.settings,
            )
        except InfeasibleFlowError as exc:
            raise InvariantViolationError(
                f"global re-solve found no route for flow {exc.flow_id}",
                flow_id=exc.flow_id,
            ) from exc
        if self._worst_period(running, plan.rates) > limit * (1.0 + 1e-9):
            # Keep the current routes and hand out only what is left over.
            plan = allocate_bandwidth(
                self.net, flows, routes, "maxmin", caps=caps, floor=rates
            )
            logger.debug("t=%.6f re-solve kept the current routes", now)
        commit_plan(self.net, plan, app_settings=self.settings)

        epsilon = self.settings.capacity_epsilon
        for entry in running:
            record = self.state.records[entry.job.id]
            entry.rates = {flow.id: plan.rates[flow.id] for flow in entry.flows}
            entry.routes = {flow.id: plan.routes[flow.id] for flow in entry.flows}
            self.plans[entry.job.id] = (entry.placement, plan.for_job(entry.job.id))
            after = _job_links(entry)
            before = previous[entry.job.id]
            delta = {
                key: after.get(key, 0.0) - before.get(key, 0.0)
                for key in sorted(set(after) | set(before))
            }
            delta = {key: value for key, value in delta.items() if abs(value) > epsilon}
            if delta:
                self._emit(now, "replanned", entry.job.id, links=delta)

            period = job_period(
                self.net, entry.job, entry.placement, entry.rates
            ).period
            if period == entry.period:
                continue
            entry.period = period
            entry.finish = now + record.remaining_batches * period
            entry.version += 1
            record.mark_rate_change(now, math.inf if period == 0 else 1.0 / period)
            self.state.push(
                entry.finish, EventKind.COMPLETION, entry.job.id, entry.version
            )

    # stepping

    def _step(self, schedule: Callable[[float], None]) -> list[Event]:
        state = self.state
        if not state.events:
            return []
        batch = state.pop_instant()
        now = batch[0][0]
        state.clock = now
        processed: list[Event] = []
        for event in batch:
            _, kind, _, version, job_id = event
            if kind == EventKind.COMPLETION:
                running = state.running.get(job_id)
                if running is None or running.version != version:
                    continue
                self._complete(running, now)
            else:
                state.waiting.append(state.pending.pop(job_id))
                self._emit(now, "arrival", job_id)
            processed.append(event)

        if self.max_wait is not None:
            for job in self._ordered_waiting():
                if now - job.arrival_time > self.max_wait:
                    self._fail(job, now, f"waited longer than {self.max_wait}s")

        schedule(now)
        if self.settings.check_invariants:
            audit(state, self.net, self.settings.capacity_epsilon)
        return processed

    def step_otfs(self) -> list[Event]:
        return self._step(self._schedule_sequential)

    def step_otfa(self) -> list[Event]:
        return self._step(self._schedule_readjust)

    def step(self) -> list[Event]:
        if self.scheduler is SchedulerName.OTFA:
            return self.step_otfa()
        return self.step_otfs()

    def run_to_completion(self) -> list[JobRecord]:
        while self.state.events:
            self.step()
        for job in self._ordered_waiting():
            self._fail(job, self.state.clock, "no node can ever host it")
        return [
            self.state.records[job_id]
            for job_id in sorted(self.state.records, key=self.state.order.__getitem__)
        ]


def run_jobs(
    network: Network,
    jobs: Iterable[Job],
    scheduler: SchedulerName | str,
    **options,
) -> list[JobRecord]:
    return SimulationEngine(network, jobs, scheduler, **options).run_to_completion()
