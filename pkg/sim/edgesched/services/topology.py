from __future__ import annotations

import logging
import math
from collections.abc import Sequence

import networkx as nx
import numpy as np
from pydantic import ValidationError

from ..core.config import Settings, settings
from ..core.errors import (
    DisconnectedError,
    DuplicateLinkError,
    InfeasibleDegreeError,
    InvalidNodeError,
    NetworkValidationError,
    NonPositiveCapacityError,
    NoPathError,
    SelfLoopError,
    TooLargeError,
)
from ..models.network import EdgeNode, Link, Network, Path, link_key
from ..schemas.network import (
    DEFAULT_TIERS,
    GeneratorConfig,
    LinkConfig,
    NetworkConfig,
    NodeConfig,
    TierConfig,
)

logger = logging.getLogger(__name__)


def validate(net: Network) -> None:
    """Raise the first violated network invariant, naming the offending element."""
    ids = sorted(node.id for node in net.nodes)
    if not ids:
        raise InvalidNodeError(-1, "network has no nodes")
    if ids != list(range(len(ids))):
        missing = next(i for i, node_id in enumerate(ids) if node_id != i)
        raise InvalidNodeError(missing, "node ids must be dense integers from 0")

    for node in net.nodes:
        if node.compute_power <= 0:
            raise NonPositiveCapacityError(f"node {node.id}", node.compute_power)
        if node.mem_capacity < 0:
            raise InvalidNodeError(node.id, "memory capacity must be >= 0")
        if not 0 <= node.mem_available <= node.mem_capacity:
            raise InvalidNodeError(
                node.id, "available memory must lie within [0, capacity]"
            )

    seen: set[tuple[int, int]] = set()
    for link in net.links:
        if link.u == link.v:
            raise SelfLoopError(link.u, link.v)
        for end in (link.u, link.v):
            if not 0 <= end < len(ids):
                raise InvalidNodeError(end, f"link {link.key} names an unknown node")
        if link.key in seen:
            raise DuplicateLinkError(*link.key)
        seen.add(link.key)
        if link.capacity <= 0:
            raise NonPositiveCapacityError(f"link {link.key}", link.capacity)

    reached = nx.node_connected_component(net.graph, ids[0])
    if len(reached) != len(ids):
        raise DisconnectedError(next(i for i in ids if i not in reached))


def _path_order(net: Network, path: Path) -> tuple:
    return (path.hops, -net.bottleneck(path), path.nodes)


def _check_endpoints(net: Network, src: int, dst: int) -> None:
    if src == dst:
        raise ValueError("source and destination must differ")
    if not nx.has_path(net.graph, src, dst):
        raise NoPathError(src, dst)


def enumerate_paths(
    net: Network,
    src: int,
    dst: int,
    k: int | None = None,
    *,
    app_settings: Settings | None = None,
) -> list[Path]:
    """Up to ``k`` loop-free paths ordered by hops, bottleneck, node sequence.

    Paths are pulled from networkx in hop order; every path that ties the
    k-th path's hop count is collected before sorting so that truncation is a
    prefix of the exhaustive ordering. Ties are collected up to
    ``max_path_candidates``. The candidate set depends on topology only and
    is cached on the network; the order is recomputed from current residuals
    on every call.
    """
    cfg = app_settings or settings
    budget = k if k is not None else cfg.k_paths
    if budget < 1:
        raise ValueError("path budget must be >= 1")
    key = (src, dst, budget)
    candidates = net.route_cache.get(key)
    if candidates is None:
        _check_endpoints(net, src, dst)
        candidates = _collect_candidates(
            net, src, dst, budget, max(budget, cfg.max_path_candidates)
        )
        net.route_cache[key] = candidates
    ordered = sorted(candidates, key=lambda path: _path_order(net, path))
    return ordered[:budget]


def _collect_candidates(
    net: Network, src: int, dst: int, budget: int, limit: int
) -> tuple[Path, ...]:
    collected: list[Path] = []
    cutoff: int | None = None
    for nodes in nx.shortest_simple_paths(net.graph, src, dst):
        hops = len(nodes) - 1
        if cutoff is not None and hops > cutoff:
            break
        collected.append(Path(tuple(nodes)))
        if cutoff is None and len(collected) >= budget:
            cutoff = hops
        if len(collected) >= limit:
            break
    return tuple(collected)


def all_simple_paths(
    net: Network,
    src: int,
    dst: int,
    *,
    max_nodes: int | None = None,
    app_settings: Settings | None = None,
) -> list[Path]:
    cap = max_nodes
    if cap is None:
        cap = (app_settings or settings).oracle_max_nodes
    if net.size > cap:
        raise TooLargeError("network", net.size, cap)
    _check_endpoints(net, src, dst)
    paths = [Path(tuple(p)) for p in nx.all_simple_paths(net.graph, src, dst)]
    paths.sort(key=lambda path: _path_order(net, path))
    return paths


def route_links(net: Network, paths: Sequence[Path]) -> list[Link]:
    """Distinct links over ``paths`` in first-seen order."""
    seen: dict[tuple[int, int], Link] = {}
    for path in paths:
        for link in net.path_links(path):
            seen.setdefault(link.key, link)
    return list(seen.values())


def average_route_bandwidth(
    net: Network,
    src: int,
    dst: int,
    k: int | None = None,
    *,
    app_settings: Settings | None = None,
) -> float:
    paths = enumerate_paths(net, src, dst, k, app_settings=app_settings)
    links = route_links(net, paths)
    return math.fsum(link.residual for link in links) / len(links)


def network_from_config(config: NetworkConfig) -> Network:
    nodes = [
        EdgeNode(
            id=node.id,
            compute_power=node.power,
            mem_capacity=node.memory,
            base_available=node.memory if node.available is None else node.available,
            tier=node.tier,
        )
        for node in sorted(config.nodes, key=lambda item: item.id)
    ]
    links = [Link(link.u, link.v, link.bandwidth) for link in config.links]
    net = Network(nodes, links)
    validate(net)
    return net


def load_network(text: str) -> Network:
    try:
        config = NetworkConfig.model_validate_json(text)
    except ValidationError as exc:
        raise NetworkValidationError(f"Malformed network document: {exc}") from exc
    return network_from_config(config)


def network_to_config(net: Network) -> NetworkConfig:
    return NetworkConfig(
        nodes=[
            NodeConfig(
                id=node.id,
                power=node.compute_power,
                memory=node.mem_capacity,
                available=(
                    None
                    if node.base_available == node.mem_capacity
                    else node.base_available
                ),
                tier=node.tier,
            )
            for node in net.nodes
        ],
        links=[
            LinkConfig(u=link.u, v=link.v, bandwidth=link.capacity)
            for link in net.links
        ],
    )


def render_network(net: Network) -> str:
    return network_to_config(net).model_dump_json(indent=2, exclude_none=True)


def generate_random_network(
    m: int,
    avg_degree: float,
    bw_mean: float,
    bw_var: float,
    tiers: Sequence[TierConfig] | None = None,
    seed: int | None = None,
) -> Network:
    """Seeded connected random mesh: random spanning tree plus extra links.

    Capacities follow N(bw_mean, bw_var) truncated below at 0.1 * bw_mean;
    device tiers are sampled by weight.
    """
    if m < 2 or avg_degree <= 0 or avg_degree >= m:
        raise InfeasibleDegreeError(m, avg_degree)
    tiers = list(tiers) if tiers else list(DEFAULT_TIERS)
    rng = np.random.default_rng(seed)

    order = rng.permutation(m)
    edges: set[tuple[int, int]] = set()
    for i in range(1, m):
        parent = order[rng.integers(0, i)]
        edges.add(link_key(int(order[i]), int(parent)))

    target = max(m - 1, math.floor(m * avg_degree / 2 + 0.5))
    target = min(target, m * (m - 1) // 2)
    extra = target - len(edges)
    if extra > 0:
        candidates = [
            (u, v) for u in range(m) for v in range(u + 1, m) if (u, v) not in edges
        ]
        picks = rng.choice(len(candidates), size=extra, replace=False)
        edges.update(candidates[int(idx)] for idx in sorted(picks))

    std = math.sqrt(bw_var)
    floor = 0.1 * bw_mean
    links = [
        Link(u, v, float(max(rng.normal(bw_mean, std), floor)))
        for u, v in sorted(edges)
    ]

    weights = np.array([tier.weight for tier in tiers], dtype=float)
    choices = rng.choice(len(tiers), size=m, p=weights / weights.sum())
    nodes = [
        EdgeNode(
            id=i,
            compute_power=tiers[idx].power,
            mem_capacity=tiers[idx].memory,
            base_available=tiers[idx].memory,
            tier=tiers[idx].name,
        )
        for i, idx in enumerate(int(c) for c in choices)
    ]
    net = Network(nodes, links)
    validate(net)
    logger.debug("generated network: %d nodes, %d links, seed %s", m, len(links), seed)
    return net


def network_from_generator(config: GeneratorConfig, seed: int) -> Network:
    return generate_random_network(
        config.nodes,
        config.avg_degree,
        config.bw_mean,
        config.bw_var,
        config.tiers,
        seed,
    )
