from __future__ import annotations

import copy
import math
from collections.abc import Hashable, Iterable, Iterator
from dataclasses import dataclass, field

import networkx as nx

from ..core.errors import CapacityExceededError, ReservationError


def link_key(u: int, v: int) -> tuple[int, int]:
    return (u, v) if u <= v else (v, u)


@dataclass(slots=True)
class EdgeNode:
    """An edge device: compute power in work-units/s, memory in memory units.

    ``base_available`` is the memory free before any job of the simulation is
    placed; reservations are tracked per owner so releasing all of them gives
    back exactly ``base_available``.
    """

    id: int
    compute_power: float
    mem_capacity: float
    base_available: float
    tier: str | None = None
    reservations: dict[Hashable, float] = field(default_factory=dict)

    @property
    def mem_available(self) -> float:
        if not self.reservations:
            return self.base_available
        return self.base_available - math.fsum(self.reservations.values())

    @property
    def mem_reserved(self) -> float:
        return math.fsum(self.reservations.values())

    def reserve(self, owner: Hashable, amount: float) -> None:
        if owner in self.reservations:
            raise ReservationError(
                f"Node {self.id} already holds a reservation for {owner}",
                node_id=self.id,
                owner=owner,
            )
        self.reservations[owner] = amount

    def release(self, owner: Hashable) -> float:
        try:
            return self.reservations.pop(owner)
        except KeyError as exc:
            raise ReservationError(
                f"Node {self.id} holds no reservation for {owner}",
                node_id=self.id,
                owner=owner,
            ) from exc


@dataclass(slots=True)
class Link:
    u: int
    v: int
    capacity: float
    reservations: dict[str, float] = field(default_factory=dict)

    @property
    def key(self) -> tuple[int, int]:
        return link_key(self.u, self.v)

    @property
    def allocated(self) -> float:
        if not self.reservations:
            return 0.0
        return math.fsum(self.reservations.values())

    @property
    def residual(self) -> float:
        return max(self.capacity - self.allocated, 0.0)

    def reserve(self, flow_id: str, rate: float, *, epsilon: float = 1e-9) -> None:
        if flow_id in self.reservations:
            raise ReservationError(
                f"Link {self.key} already carries flow {flow_id}",
                link=self.key,
                flow_id=flow_id,
            )
        self.reservations[flow_id] = rate
        total = self.allocated
        if total > self.capacity + epsilon:
            del self.reservations[flow_id]
            raise CapacityExceededError(self.key, total, self.capacity)

    def release(self, flow_id: str) -> float:
        try:
            return self.reservations.pop(flow_id)
        except KeyError as exc:
            raise ReservationError(
                f"Link {self.key} carries no flow {flow_id}",
                link=self.key,
                flow_id=flow_id,
            ) from exc


@dataclass(frozen=True, slots=True)
class Path:
    nodes: tuple[int, ...]

    @property
    def links(self) -> tuple[tuple[int, int], ...]:
        return tuple(link_key(a, b) for a, b in zip(self.nodes, self.nodes[1:]))

    @property
    def hops(self) -> int:
        return len(self.nodes) - 1

    def __iter__(self) -> Iterator[int]:
        return iter(self.nodes)


class Network:
    """Undirected edge network; links share one capacity for both directions."""

    def __init__(self, nodes: Iterable[EdgeNode], links: Iterable[Link]) -> None:
        self.nodes: list[EdgeNode] = list(nodes)
        self.links: list[Link] = list(links)
        self._by_id = {node.id: node for node in self.nodes}
        self._by_key: dict[tuple[int, int], Link] = {}
        self._adjacency: dict[int, list[Link]] = {node.id: [] for node in self.nodes}
        for link in self.links:
            self._by_key.setdefault(link.key, link)
            for end in {link.u, link.v}:
                self._adjacency.setdefault(end, []).append(link)
        self._graph: nx.Graph | None = None
        # Candidate routes per (src, dst, budget); topology never changes.
        self.route_cache: dict[tuple[int, int, int], tuple[Path, ...]] = {}

    @property
    def size(self) -> int:
        return len(self.nodes)

    @property
    def graph(self) -> nx.Graph:
        if self._graph is None:
            graph = nx.Graph()
            graph.add_nodes_from(node.id for node in self.nodes)
            for link in self.links:
                if link.u != link.v:
                    graph.add_edge(link.u, link.v)
            self._graph = graph
        return self._graph

    def node(self, node_id: int) -> EdgeNode:
        return self._by_id[node_id]

    def link(self, u: int, v: int) -> Link:
        return self._by_key[link_key(u, v)]

    def incident(self, node_id: int) -> list[Link]:
        return list(self._adjacency.get(node_id, ()))

    def path_links(self, path: Path) -> list[Link]:
        return [self._by_key[key] for key in path.links]

    def bottleneck(self, path: Path) -> float:
        return min(link.residual for link in self.path_links(path))

    def snapshot(self) -> tuple:
        nodes = tuple(
            (node.id, node.mem_available, tuple(sorted(node.reservations.items())))
            for node in self.nodes
        )
        links = tuple(
            (link.key, link.allocated, tuple(sorted(link.reservations.items())))
            for link in self.links
        )
        return nodes, links

    def copy(self) -> Network:
        clone = Network(copy.deepcopy(self.nodes), copy.deepcopy(self.links))
        clone.route_cache = self.route_cache
        return clone
