"""Admitted-flow snapshots on a topology, and synthetic flows along a single route."""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .graph import Route, Topology, random_shortest_path, shortest_path

# consecutive admission failures that count as saturation
REJECTION_STREAK = 200


@dataclass(frozen=True)
class Flow:
    id: int
    cls: int
    bandwidth: float
    path: Route

    def __post_init__(self):
        if self.bandwidth <= 0:
            raise ValueError("flow bandwidth must be positive")


@dataclass
class TrafficConfig:
    """Snapshot traffic parameters.

    ``arrival_rates`` / ``departure_rates`` only set the class mix: a class is
    drawn with probability proportional to its offered load lambda/mu.
    Equal (or missing) rates give a uniform class draw.
    """

    class_bandwidth_ranges: dict[int, tuple[float, float]] = field(
        default_factory=lambda: {1: (1.25, 2.5), 2: (2.5, 37.5)})
    arrival_rates: dict[int, float] | None = None
    departure_rates: dict[int, float] | None = None
    target_load: float | None = None
    flow_count: int | None = None
    seed: int = 0
    rejection_streak: int = REJECTION_STREAK

    def __post_init__(self):
        self.class_bandwidth_ranges = {
            int(c): (float(lo), float(hi)) for c, (lo, hi) in self.class_bandwidth_ranges.items()}
        for c, (lo, hi) in self.class_bandwidth_ranges.items():
            if lo <= 0 or hi < lo:
                raise ValueError(f"bad bandwidth range for class {c}: {(lo, hi)}")
        for rates in (self.arrival_rates, self.departure_rates):
            if rates is not None and any(r <= 0 for r in rates.values()):
                raise ValueError("rates must be positive")
        if self.target_load is not None and not (0 < self.target_load <= 1):
            raise ValueError("target_load is a fraction of total capacity in (0, 1]")
        if self.flow_count is not None and self.flow_count < 0:
            raise ValueError("flow_count must be non-negative")

    def class_weights(self) -> tuple[list[int], list[float]]:
        classes = sorted(self.class_bandwidth_ranges)
        lam = {int(k): float(v) for k, v in (self.arrival_rates or {}).items()}
        mu = {int(k): float(v) for k, v in (self.departure_rates or {}).items()}
        weights = [lam.get(c, 1.0) / mu.get(c, 1.0) for c in classes]
        return classes, weights


def generate_network_flows(t: Topology, cfg: TrafficConfig) -> list[Flow]:
    """Admit shortest-path flows between random S-D pairs until the network fills.

    Stops when ``flow_count`` flows are admitted, when admitted bandwidth
    reaches ``target_load`` of total capacity, or after ``rejection_streak``
    consecutive rejections, whichever comes first.
    """
    if cfg.flow_count == 0:
        return []
    rng = random.Random(cfg.seed)
    classes, weights = cfg.class_weights()
    residual = dict(t.capacity)
    total_cap = sum(t.capacity.values())
    carried = 0.0
    flows: list[Flow] = []
    streak = 0
    routes: dict[tuple[int, int], Route] = {}
    while streak < cfg.rejection_streak:
        if cfg.flow_count is not None and len(flows) >= cfg.flow_count:
            break
        if cfg.target_load is not None and carried >= cfg.target_load * total_cap:
            break
        s, d = rng.sample(range(t.node_count), 2)
        cls = rng.choices(classes, weights)[0]
        lo, hi = cfg.class_bandwidth_ranges[cls]
        bw = rng.uniform(lo, hi)
        route = routes.get((s, d))
        if route is None:
            route = routes[(s, d)] = shortest_path(t, s, d)
        links = route.links
        if all(residual[e] >= bw for e in links):
            for e in links:
                residual[e] -= bw
            carried += bw * len(links)
            flows.append(Flow(len(flows) + 1, cls, bw, route))
            streak = 0
        else:
            streak += 1
    return flows


def link_loads(t: Topology, flows: Iterable[Flow]) -> dict:
    load = {e: 0.0 for e in t.edges}
    for f in flows:
        for e in f.path.links:
            load[e] += f.bandwidth
    return load


def flows_to_jsonl(flows: Iterable[Flow]) -> str:
    lines = [json.dumps({"id": f.id, "class": f.cls, "bandwidth": f.bandwidth,
                         "path": list(f.path.nodes)}) for f in flows]
    return "\n".join(lines) + ("\n" if lines else "")


def flows_from_jsonl(text: str) -> list[Flow]:
    out = []
    for line in text.splitlines():
        if line.strip():
            rec = json.loads(line)
            out.append(Flow(int(rec["id"]), int(rec["class"]), float(rec["bandwidth"]),
                            Route(tuple(rec["path"]))))
    return out


# -- synthetic flows on one straight route ------------------------------------


@dataclass
class RouteTrafficSpec:
    """Geometric-span flows on a route of ``L`` links.

    ``flows_per_link`` is the mean number of flows carried by a link; the
    total flow count is derived from it and the mean (truncated) span.
    """

    L: int = 10
    p_c: float = 1 / 3
    B0: float = 10.0
    eps_B: float = 0.2
    flows_per_link: float = 2.0
    seed: int = 0
    cls: int = 1

    def __post_init__(self):
        if self.L < 1:
            raise ValueError("L must be >= 1")
        if not (0 <= self.p_c < 1):
            raise ValueError("p_c must lie in [0, 1)")
        if not (0 <= self.eps_B < 1) or self.B0 <= 0:
            raise ValueError("need B0 > 0 and 0 <= eps_B < 1")
        if self.flows_per_link < 0:
            raise ValueError("flows_per_link must be non-negative")

    def flow_count(self) -> int:
        return max(0, round(self.flows_per_link * self.L / mean_truncated_span(self.L, self.p_c)))


def mean_truncated_span(L: int, p_c: float) -> float:
    """Expected span when the entry link is uniform and the route end truncates."""
    total = 0.0
    for start in range(1, L + 1):
        room = L - start + 1
        # E[min(G, room)] for G ~ Geometric(1 - p_c) on {1, 2, ...}
        total += sum(p_c ** j for j in range(room))
    return total / L


@dataclass(frozen=True)
class SpanFlow:
    """A flow confined to the route: occupies links ``lo..hi`` (1-based, inclusive)."""

    id: int
    cls: int
    bandwidth: float
    lo: int
    hi: int

    @property
    def span(self) -> int:
        return self.hi - self.lo + 1


def generate_route_flows(spec: RouteTrafficSpec, count: int | None = None) -> list[SpanFlow]:
    rng = np.random.default_rng(spec.seed)
    n = spec.flow_count() if count is None else count
    flows = []
    for k in range(1, n + 1):
        lo = int(rng.integers(1, spec.L + 1))
        hi = lo
        while hi < spec.L and rng.random() < spec.p_c:
            hi += 1
        if spec.eps_B > 0:
            bw = float(rng.uniform(spec.B0 * (1 - spec.eps_B), spec.B0 * (1 + spec.eps_B)))
        else:
            bw = float(spec.B0)
        flows.append(SpanFlow(k, spec.cls, bw, lo, hi))
    return flows


# -- empirical link dependency --------------------------------------------------


@dataclass
class LinkDependency:
    """Per hop-separation estimates, averaged over runs."""

    route_length: int
    estimate: dict[int, float]
    stderr: dict[int, float]
    touching_flows: int


def _route_pairs_at(t: Topology, hops: int) -> list[tuple[int, int]]:
    pairs = []
    for s in range(t.node_count):
        dist = t.distances_from(s)
        pairs += [(s, d) for d in range(t.node_count) if dist[d] == hops]
    return pairs


def empirical_link_dependency(t: Topology, samples: int, runs: int, seed: int,
                              route_length: int = 10, max_h: int = 6) -> LinkDependency:
    """Monte-Carlo estimate of the probability a flow uses two route links h apart.

    Each run draws one new-call route of ``route_length`` hops and then
    shortest-path flows between uniform S-D pairs (ties among shortest paths
    broken uniformly at random) until ``samples`` of them share at least
    one link with the route. For each touching flow and separation ``h``
    the indicator is whether it occupies some pair of route links exactly
    ``h`` apart. Run means are averaged; the standard error is taken over
    runs.
    """
    if samples < 1 or runs < 1:
        raise ValueError("samples and runs must be >= 1")
    rng = random.Random(seed)
    candidates = _route_pairs_at(t, route_length)
    if not candidates:
        raise ValueError(f"no S-D pair is {route_length} hops apart")
    per_run: dict[int, list[float]] = {h: [] for h in range(max_h + 1)}
    touching_total = 0
    for _ in range(runs):
        s, d = candidates[rng.randrange(len(candidates))]
        route = random_shortest_path(t, s, d, rng)
        index = {e: i for i, e in enumerate(route.links)}
        hits = {h: 0 for h in range(max_h + 1)}
        touching = 0
        while touching < samples:
            a, b = rng.sample(range(t.node_count), 2)
            path = random_shortest_path(t, a, b, rng)
            on_route = sorted(index[e] for e in path.links if e in index)
            if not on_route:
                continue
            touching += 1
            occupied = set(on_route)
            for h in range(max_h + 1):
                if any(i + h in occupied for i in on_route):
                    hits[h] += 1
        touching_total += touching
        for h in hits:
            per_run[h].append(hits[h] / touching)
    estimate = {h: float(np.mean(v)) for h, v in per_run.items()}
    if runs > 1:
        stderr = {h: float(np.std(v, ddof=1) / math.sqrt(runs)) for h, v in per_run.items()}
    else:
        # single run: binomial standard error
        stderr = {h: math.sqrt(p * (1 - p) / samples) for h, p in estimate.items()}
    return LinkDependency(route_length, estimate, stderr, touching_total)


def path_graph_link_dependency(n: int, route: tuple[int, int], h: int) -> float:
    """Exact dependency on a path graph by enumerating every ordered S-D pair.

    ``route`` is ``(s, d)`` with ``s < d``; link ``i`` joins node ``i`` and
    ``i + 1``.
    """
    s, d = route
    touching = both = 0
    for a in range(n):
        for b in range(n):
            if a == b:
                continue
            lo, hi = min(a, b), max(a, b)
            # overlap of link intervals [lo, hi-1] and [s, d-1]
            first, last = max(lo, s), min(hi - 1, d - 1)
            if first > last:
                continue
            touching += 1
            if last - first >= h:
                both += 1
    return both / touching if touching else 0.0
