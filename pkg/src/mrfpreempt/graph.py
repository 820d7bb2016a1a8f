"""Topologies and hop-count routing.

Nodes are dense 0-based integers. Links are undirected and stored as
``(u, v)`` with ``u < v``.
"""

from __future__ import annotations

import json
import random
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Iterable

Edge = tuple[int, int]


class NoRouteError(ValueError):
    pass


def edge_key(u: int, v: int) -> Edge:
    return (u, v) if u < v else (v, u)


@dataclass(frozen=True)
class Route:
    nodes: tuple[int, ...]

    def __post_init__(self):
        if len(self.nodes) < 2:
            raise ValueError("a route needs at least one link")
        if len(set(self.nodes)) != len(self.nodes):
            raise ValueError(f"route revisits a node: {self.nodes}")

    @property
    def hops(self) -> int:
        return len(self.nodes) - 1

    @property
    def links(self) -> tuple[Edge, ...]:
        return tuple(edge_key(a, b) for a, b in zip(self.nodes, self.nodes[1:]))


@dataclass(frozen=True)
class Topology:
    node_count: int
    edges: tuple[Edge, ...]
    capacity: dict[Edge, float] = field(compare=False)
    kind: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        for u, v in self.edges:
            if not (0 <= u < v < self.node_count):
                raise ValueError(f"bad edge {(u, v)}")
        if set(self.capacity) != set(self.edges):
            raise ValueError("capacity must be given for exactly the edge set")
        if any(c <= 0 for c in self.capacity.values()):
            raise ValueError("link capacities must be positive")

    @cached_property
    def adjacency(self) -> tuple[tuple[int, ...], ...]:
        """Sorted neighbour lists; sorting fixes every tie-break downstream."""
        adj: list[list[int]] = [[] for _ in range(self.node_count)]
        for u, v in self.edges:
            adj[u].append(v)
            adj[v].append(u)
        return tuple(tuple(sorted(a)) for a in adj)

    def degree(self, node: int) -> int:
        return len(self.adjacency[node])

    def has_edge(self, u: int, v: int) -> bool:
        return edge_key(u, v) in self.capacity

    def distances_from(self, src: int) -> list[int]:
        """BFS hop counts from ``src``; unreachable nodes get -1."""
        return self._distance_table(src)

    def _distance_table(self, src: int) -> list[int]:
        cache = self.__dict__.setdefault("_bfs_cache", {})
        dist = cache.get(src)
        if dist is None:
            dist = _bfs(self.adjacency, src)
            cache[src] = dist
        return dist

    def is_connected(self) -> bool:
        if self.node_count == 0:
            return True
        return min(_bfs(self.adjacency, 0)) >= 0

    def to_dict(self) -> dict[str, Any]:
        return {
            "nodes": self.node_count,
            "edges": [[u, v, self.capacity[(u, v)]] for u, v in self.edges],
            "kind": dict(self.kind),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, doc: dict[str, Any]) -> "Topology":
        cap = {}
        for u, v, c in doc["edges"]:
            cap[edge_key(int(u), int(v))] = float(c)
        return cls(int(doc["nodes"]), tuple(sorted(cap)), cap, dict(doc.get("kind", {})))

    @classmethod
    def from_json(cls, text: str) -> "Topology":
        return cls.from_dict(json.loads(text))


def _bfs(adj, src: int) -> list[int]:
    dist = [-1] * len(adj)
    dist[src] = 0
    queue = deque([src])
    while queue:
        u = queue.popleft()
        for v in adj[u]:
            if dist[v] < 0:
                dist[v] = dist[u] + 1
                queue.append(v)
    return dist


def _make(n: int, edges: Iterable[Edge], capacity: float, kind: dict) -> Topology:
    edges = tuple(sorted(set(edge_key(u, v) for u, v in edges)))
    return Topology(n, edges, {e: float(capacity) for e in edges}, kind)


def build_lattice(rows: int, cols: int, capacity: float = 100.0) -> Topology:
    """Planar grid; node ``r * cols + c`` sits at row ``r``, column ``c``."""
    if rows < 2 or cols < 2:
        raise ValueError("lattice needs rows >= 2 and cols >= 2")
    if capacity <= 0:
        raise ValueError("capacity must be positive")
    edges = []
    for r in range(rows):
        for c in range(cols):
            u = r * cols + c
            if c + 1 < cols:
                edges.append((u, u + 1))
            if r + 1 < rows:
                edges.append((u, u + cols))
    return _make(rows * cols, edges, capacity,
                 {"type": "lattice", "rows": rows, "cols": cols})


def build_power_law(n: int, m: int, seed: int, capacity: float = 100.0) -> Topology:
    """Barabasi-Albert growth from an (m+1)-clique.

    Each arriving node links to ``m`` distinct existing nodes chosen with
    probability proportional to their degree.
    """
    if m < 1 or n <= m:
        raise ValueError("power-law topology needs n > m >= 1")
    if capacity <= 0:
        raise ValueError("capacity must be positive")
    rng = random.Random(seed)
    edges: list[Edge] = []
    # each endpoint appears once per incident edge -> degree-weighted draws
    stubs: list[int] = []
    for u in range(m + 1):
        for v in range(u + 1, m + 1):
            edges.append((u, v))
            stubs += (u, v)
    for new in range(m + 1, n):
        targets: set[int] = set()
        while len(targets) < m:
            targets.add(stubs[rng.randrange(len(stubs))])
        for t in sorted(targets):
            edges.append((t, new))
            stubs += (t, new)
    return _make(n, edges, capacity,
                 {"type": "power_law", "n": n, "m": m, "seed": seed})


def _check_nodes(t: Topology, *nodes: int) -> None:
    for x in nodes:
        if not (0 <= x < t.node_count):
            raise ValueError(f"node {x} not in topology")


def shortest_path(t: Topology, s: int, d: int) -> Route:
    """Minimum-hop route, taking the smallest-id neighbour at every tie."""
    _check_nodes(t, s, d)
    if s == d:
        raise ValueError("source and destination coincide")
    to_d = t.distances_from(d)
    if to_d[s] < 0:
        raise NoRouteError(f"no route from {s} to {d}")
    nodes = [s]
    u = s
    while u != d:
        # adjacency is sorted, so the first closer neighbour is the smallest id
        u = next(v for v in t.adjacency[u] if to_d[v] == to_d[u] - 1)
        nodes.append(u)
    return Route(tuple(nodes))


def count_shortest_paths(t: Topology, s: int, d: int) -> int:
    _check_nodes(t, s, d)
    if s == d:
        return 1
    dist = [-1] * t.node_count
    count = [0] * t.node_count
    dist[s], count[s] = 0, 1
    queue = deque([s])
    while queue:
        u = queue.popleft()
        if u == d:
            break
        for v in t.adjacency[u]:
            if dist[v] < 0:
                dist[v] = dist[u] + 1
                queue.append(v)
            if dist[v] == dist[u] + 1:
                count[v] += count[u]
    return count[d]


def random_shortest_path(t: Topology, s: int, d: int, rng: random.Random) -> Route:
    """A minimum-hop route drawn uniformly from all of them."""
    _check_nodes(t, s, d)
    if s == d:
        raise ValueError("source and destination coincide")
    to_d = t.distances_from(d)
    if to_d[s] < 0:
        raise NoRouteError(f"no route from {s} to {d}")
    ways = _paths_to(t, d, to_d)
    nodes = [s]
    u = s
    while u != d:
        nxt = [v for v in t.adjacency[u] if to_d[v] == to_d[u] - 1]
        pick = rng.random() * ways[u]
        for v in nxt:
            pick -= ways[v]
            if pick < 0:
                break
        u = v
        nodes.append(u)
    return Route(tuple(nodes))


def _paths_to(t: Topology, d: int, to_d: list[int]) -> list[int]:
    """Number of shortest paths from every node to ``d`` (cached per target)."""
    cache = t.__dict__.setdefault("_ways_cache", {})
    ways = cache.get(d)
    if ways is None:
        order = sorted(range(t.node_count), key=lambda x: to_d[x])
        ways = [0] * t.node_count
        ways[d] = 1
        for u in order:
            if to_d[u] <= 0:
                continue
            ways[u] = sum(ways[v] for v in t.adjacency[u] if to_d[v] == to_d[u] - 1)
        cache[d] = ways
    return ways
