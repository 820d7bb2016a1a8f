"""Preemption instances on a single route and their energy functions.

Links on the route are numbered ``1..L``. A decision matrix holds one binary
vote ``d[(i, k)]`` per (link, flow) incidence: link ``i`` votes to preempt
flow ``k``. The flow is preempted globally when any link on its span votes
for it.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .graph import Route, Topology
from .traffic import Flow, SpanFlow

MAX_EXPANDED_SPAN = 20
# slack for bandwidth comparisons; sums are accumulated in floating point
BW_TOL = 1e-9


@dataclass(frozen=True)
class RouteFlow:
    """A preemptible flow's contiguous overlap ``lo..hi`` with the route.

    ``origin`` is the id of the network flow it came from; a flow that meets
    the route in several separate stretches yields one record per stretch.
    """

    k: int
    cls: int
    bandwidth: float
    lo: int
    hi: int
    origin: int | None = None

    @property
    def links(self) -> range:
        return range(self.lo, self.hi + 1)

    @property
    def span(self) -> int:
        return self.hi - self.lo + 1


@dataclass(frozen=True)
class PreemptionInstance:
    L: int
    flows: tuple[RouteFlow, ...]
    free_bw: tuple[float, ...]
    c_new: float
    i_new: int
    alpha: Mapping[int, float] = field(compare=False)
    beta: float = 0.0

    def __post_init__(self):
        if self.L < 1:
            raise ValueError("route needs at least one link")
        if len(self.free_bw) != self.L:
            raise ValueError("free_bw needs one entry per link")
        if any(b < 0 for b in self.free_bw):
            raise ValueError("free bandwidth must be non-negative")
        if self.c_new <= 0:
            raise ValueError("c_new must be positive")
        if self.beta <= 0:
            raise ValueError("beta must be positive")
        ids = [f.k for f in self.flows]
        if len(set(ids)) != len(ids):
            raise ValueError("flow ids must be unique")
        for f in self.flows:
            if not (1 <= f.lo <= f.hi <= self.L):
                raise ValueError(f"flow {f.k} span {f.lo}..{f.hi} outside 1..{self.L}")
            if f.bandwidth <= 0:
                raise ValueError(f"flow {f.k} has non-positive bandwidth")
            if self.alpha.get(f.cls, 0) <= 0:
                raise ValueError(f"no positive weight for class {f.cls}")
        ranked = sorted(self.alpha)
        if any(self.alpha[a] >= self.alpha[b] for a, b in zip(ranked, ranked[1:])):
            raise ValueError("alpha must increase strictly with class priority")

    def weight(self, f: RouteFlow) -> float:
        return self.alpha[f.cls] * f.bandwidth

    def flows_at(self, i: int) -> list[RouteFlow]:
        return [f for f in self.flows if f.lo <= i <= f.hi]

    def incidences(self) -> list[tuple[int, int]]:
        return [(i, f.k) for f in self.flows for i in f.links]

    def by_id(self) -> dict[int, RouteFlow]:
        return {f.k: f for f in self.flows}

    def to_dict(self) -> dict:
        return {
            "L": self.L,
            "flows": [{"k": f.k, "class": f.cls, "B": f.bandwidth, "span": [f.lo, f.hi],
                       **({"origin": f.origin} if f.origin is not None else {})}
                      for f in self.flows],
            "free_bw": list(self.free_bw),
            "c_new": self.c_new,
            "i_new": self.i_new,
            "alpha": {str(c): a for c, a in sorted(self.alpha.items())},
            "beta": self.beta,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, doc: dict) -> "PreemptionInstance":
        flows = tuple(RouteFlow(int(f["k"]), int(f["class"]), float(f["B"]),
                                int(f["span"][0]), int(f["span"][1]), f.get("origin"))
                      for f in doc["flows"])
        alpha = {int(c): float(a) for c, a in doc["alpha"].items()}
        beta = doc.get("beta")
        if beta is None:
            beta = default_beta(flows, alpha)
        return cls(int(doc["L"]), flows, tuple(float(b) for b in doc["free_bw"]),
                   float(doc["c_new"]), int(doc["i_new"]), alpha, float(beta))

    @classmethod
    def from_json(cls, text: str) -> "PreemptionInstance":
        return cls.from_dict(json.loads(text))


def default_alpha(classes: Iterable[int]) -> dict[int, float]:
    return {int(c): float(c) for c in classes}


def default_beta(flows: Iterable[RouteFlow], alpha: Mapping[int, float]) -> float:
    """Twice the cost of preempting every flow, so one violated link outweighs any saving."""
    total = sum(alpha[f.cls] * f.bandwidth for f in flows)
    return 2.0 * total if total > 0 else 1.0


def make_instance(L: int, flows: Iterable[RouteFlow], free_bw, c_new: float, i_new: int,
                  alpha: Mapping[int, float] | None = None,
                  beta: float | None = None) -> PreemptionInstance:
    flows = tuple(flows)
    if alpha is None:
        alpha = default_alpha({f.cls for f in flows} | {i_new})
    if beta is None:
        beta = default_beta(flows, alpha)
    if isinstance(free_bw, (int, float)):
        free_bw = [free_bw] * L
    return PreemptionInstance(L, flows, tuple(float(b) for b in free_bw), float(c_new),
                              i_new, dict(alpha), float(beta))


def instance_from_span_flows(flows: Iterable[SpanFlow], L: int, c_new: float, i_new: int = 2,
                             capacity: float | None = None, free_bw: float = 0.0,
                             alpha=None, beta=None) -> PreemptionInstance:
    """Instance for synthetic route flows.

    With ``capacity`` set, free bandwidth is what the flows leave unused
    (clipped at zero); otherwise every link has ``free_bw``.
    """
    flows = list(flows)
    rf = [RouteFlow(f.id, f.cls, f.bandwidth, f.lo, f.hi, f.id) for f in flows]
    if capacity is None:
        free = [free_bw] * L
    else:
        load = [0.0] * L
        for f in flows:
            for i in range(f.lo, f.hi + 1):
                load[i - 1] += f.bandwidth
        free = [max(0.0, capacity - x) for x in load]
    return make_instance(L, rf, free, c_new, i_new, alpha, beta)


def extract_instance(t: Topology, flows: Iterable[Flow], route: Route, c_new: float,
                     i_new: int, alpha: Mapping[int, float] | None = None,
                     beta: float | None = None) -> PreemptionInstance:
    """Cut the network snapshot down to what matters for one new call.

    Free bandwidth counts every flow on the link, whatever its class; only
    strictly lower classes than ``i_new`` become decision variables.
    """
    flows = list(flows)
    index = {e: i for i, e in enumerate(route.links, start=1)}
    L = route.hops
    load = [0.0] * L
    pieces: list[tuple[int, int, int, float, int, int]] = []
    for f in flows:
        on = sorted({index[e] for e in f.path.links if e in index})
        if not on:
            continue
        for i in on:
            load[i - 1] += f.bandwidth
        if f.cls >= i_new:
            continue
        runs = []
        start = prev = on[0]
        for i in on[1:]:
            if i != prev + 1:
                runs.append((start, prev))
                start = i
            prev = i
        runs.append((start, prev))
        for lo, hi in runs:
            pieces.append((f.id, lo, hi, f.bandwidth, f.cls, f.id))
    pieces.sort()
    rflows = [RouteFlow(k, cls, bw, lo, hi, origin)
              for k, (_, lo, hi, bw, cls, origin) in enumerate(pieces, start=1)]
    free = [max(0.0, t.capacity[e] - load[i - 1]) for e, i in index.items()]
    if alpha is None:
        alpha = default_alpha({f.cls for f in flows} | {i_new})
    return make_instance(L, rflows, free, c_new, i_new, alpha, beta)


# -- decisions ----------------------------------------------------------------


class DecisionMatrix(dict):
    """``{(link, flow_id): 0 | 1}`` over exactly the instance's incidences."""

    @classmethod
    def zeros(cls, inst: PreemptionInstance) -> "DecisionMatrix":
        return cls({key: 0 for key in inst.incidences()})

    @classmethod
    def from_global(cls, inst: PreemptionInstance, preempted: Iterable[int]) -> "DecisionMatrix":
        chosen = set(preempted)
        return cls({(i, k): int(k in chosen) for i, k in inst.incidences()})

    @classmethod
    def from_sequence(cls, inst: PreemptionInstance, values: Iterable[int]) -> "DecisionMatrix":
        """Values listed link by link, flows in id order within a link."""
        keys = sorted(inst.incidences())
        values = list(values)
        if len(values) != len(keys):
            raise ValueError(f"expected {len(keys)} decisions, got {len(values)}")
        return cls(zip(keys, (int(v) for v in values)))


def global_decision(inst: PreemptionInstance, d: Mapping[tuple[int, int], int]) -> dict[int, int]:
    out = {}
    for f in inst.flows:
        keep = 1
        for i in f.links:
            keep *= 1 - d[(i, f.k)]
        out[f.k] = 1 - keep
    return out


def available(inst: PreemptionInstance, d: Mapping[tuple[int, int], int]) -> list[float]:
    """Bandwidth the new call could use on each link: free plus locally preempted."""
    avail = list(inst.free_bw)
    for f in inst.flows:
        for i in f.links:
            if d[(i, f.k)]:
                avail[i - 1] += f.bandwidth
    return avail


def _violations(inst: PreemptionInstance, d) -> int:
    return sum(1 for a in available(inst, d) if inst.c_new - a > BW_TOL)


def objective(inst: PreemptionInstance, g: Mapping[int, int]) -> float:
    return sum(inst.weight(f) * g[f.k] for f in inst.flows)


def hamiltonian(inst: PreemptionInstance, d) -> float:
    cost = 0.0
    for f in inst.flows:
        keep = 1
        for i in f.links:
            keep *= 1 - d[(i, f.k)]
        cost += inst.weight(f) * (1 - keep)
    return cost + inst.beta * _violations(inst, d)


def hamiltonian_expanded(inst: PreemptionInstance, d) -> float:
    """Same energy, with each flow term written as the alternating sum over link subsets."""
    cost = 0.0
    for f in inst.flows:
        if f.span > MAX_EXPANDED_SPAN:
            raise ValueError(f"flow {f.k} spans {f.span} links; expansion refused")
        x = [d[(i, f.k)] for i in f.links]
        term = 0
        for order in range(1, len(x) + 1):
            sign = 1 if order % 2 else -1
            term += sign * sum(math.prod(c) for c in itertools.combinations(x, order))
        cost += inst.weight(f) * term
    return cost + inst.beta * _violations(inst, d)


def local_flow_terms(inst: PreemptionInstance, d, n_d: int) -> tuple[float, float]:
    """Weighted first-order sum and within-``n_d`` pair sum (unordered pairs)."""
    first = second = 0.0
    for f in inst.flows:
        w = inst.weight(f)
        x = [d[(i, f.k)] for i in f.links]
        first += w * sum(x)
        for a in range(len(x)):
            for b in range(a + 1, min(len(x), a + n_d + 1)):
                second += w * x[a] * x[b]
    return first, second


def local_hamiltonian(inst: PreemptionInstance, d, n_d: int) -> float:
    """Energy keeping only single votes and vote pairs at most ``n_d`` links apart."""
    if n_d < 0:
        raise ValueError("neighbourhood size must be >= 0")
    first, second = local_flow_terms(inst, d, n_d)
    return first - second + inst.beta * _violations(inst, d)


def vote_groups(votes, n_d: int) -> int:
    """Groups among the 1s of ``votes`` when 1s at most ``n_d`` apart share a group."""
    groups, last = 0, None
    for i, v in enumerate(votes):
        if v:
            if last is None or i - last > n_d:
                groups += 1
            last = i
    return groups


def cluster_hamiltonian(inst: PreemptionInstance, d, n_d: int) -> float:
    """Local energy charging each flow once per group of votes no more than ``n_d`` links apart.

    Matches :func:`local_hamiltonian` for ``n_d <= 1`` and :func:`hamiltonian`
    once ``n_d`` reaches every span minus one. Never below ``hamiltonian``.
    """
    if n_d < 0:
        raise ValueError("neighbourhood size must be >= 0")
    flow = sum(inst.weight(f) * vote_groups([d[(i, f.k)] for i in f.links], n_d)
               for f in inst.flows)
    return flow + inst.beta * _violations(inst, d)


def feasible(inst: PreemptionInstance, d) -> bool:
    return all(inst.c_new - a <= BW_TOL for a in available(inst, d))


def consistency(inst: PreemptionInstance, d) -> dict[int, bool]:
    return {f.k: len({d[(i, f.k)] for i in f.links}) == 1 for f in inst.flows}


def fig1_instance(c_new: float = 1.0, beta: float = 100.0) -> PreemptionInstance:
    """Four-link example route: flow 1 on links 1-3, flow 2 on 4, 3 on 1, 4 on 2, 5 on 3-4."""
    spans = {1: (1, 3), 2: (4, 4), 3: (1, 1), 4: (2, 2), 5: (3, 4)}
    flows = [RouteFlow(k, 1, 1.0, lo, hi) for k, (lo, hi) in spans.items()]
    return make_instance(4, flows, 0.0, c_new, 2, {1: 1.0, 2: 2.0}, beta)
