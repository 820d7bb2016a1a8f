"""Declarative experiment configs and the harness that runs them.

A config is a JSON document. Every section is optional; omitted values take
per-kind defaults, and unknown keys are rejected. Results are rows of plain
values, written as CSV (one row per parameter point and solver) or JSON.
"""

from __future__ import annotations

import csv
import io
import json
import random
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Any

import numpy as np

from .analysis import (avg_preempted_bw, lemma2_lower, lemma3_asymptotic_pair,
                       lemma3_upper, measure_delta_route)
from .graph import Topology, build_lattice, build_power_law, shortest_path
from .model import (PreemptionInstance, RouteFlow, hamiltonian, instance_from_span_flows,
                    extract_instance, make_instance, feasible, DecisionMatrix)
from .solvers import GibbsConfig, brute_force_optimal, gibbs_solve, min_bw, min_conn
from .solvers.exact import MAX_FLOWS
from .traffic import (RouteTrafficSpec, TrafficConfig, empirical_link_dependency,
                      generate_network_flows, generate_route_flows)

KINDS = ("table2_lattice", "table3_powerlaw", "fig3_pij", "fig4_nd_pc_sweep",
         "fig5_length_sweep", "fig6_demand_sweep", "oracle_smallscale", "bounds_check")
SOLVERS = ("min_conn", "min_bw", "gibbs")


class ConfigError(ValueError):
    pass


# -- config sections -----------------------------------------------------------


@dataclass
class TopologyParams:
    type: str = "lattice"
    rows: int = 10
    cols: int = 10
    n: int = 80
    m: int = 2
    capacity: float = 100.0

    def validate(self):
        if self.type not in ("lattice", "power_law"):
            raise ConfigError(f"topology.type must be lattice or power_law, got {self.type!r}")
        if self.rows < 2 or self.cols < 2:
            raise ConfigError("lattice needs rows, cols >= 2")
        if not (self.n > self.m >= 1):
            raise ConfigError("power law needs n > m >= 1")
        if self.capacity <= 0:
            raise ConfigError("capacity must be positive")

    def build(self, seed: int) -> Topology:
        if self.type == "lattice":
            return build_lattice(self.rows, self.cols, self.capacity)
        return build_power_law(self.n, self.m, seed, self.capacity)


@dataclass
class TrafficParams:
    class_bandwidth_ranges: dict = field(default_factory=lambda: {1: [1.25, 2.5], 2: [2.5, 37.5]})
    # lambda/mu ratios set the class mix; 10.67 : 1 offers both classes the same bandwidth
    arrival_rates: dict = field(default_factory=lambda: {1: 10.67, 2: 1.0})
    departure_rates: dict = field(default_factory=lambda: {1: 1.0, 2: 1.0})
    target_load: float | None = None
    flow_count: int | None = None
    rejection_streak: int = 200

    def validate(self):
        self.class_bandwidth_ranges = {int(k): [float(x) for x in v]
                                       for k, v in self.class_bandwidth_ranges.items()}
        self.arrival_rates = {int(k): float(v) for k, v in self.arrival_rates.items()}
        self.departure_rates = {int(k): float(v) for k, v in self.departure_rates.items()}
        try:
            self.to_config(0)
        except ValueError as e:
            raise ConfigError(f"traffic: {e}") from None

    def to_config(self, seed: int) -> TrafficConfig:
        return TrafficConfig(
            class_bandwidth_ranges={k: tuple(v) for k, v in self.class_bandwidth_ranges.items()},
            arrival_rates=self.arrival_rates, departure_rates=self.departure_rates,
            target_load=self.target_load, flow_count=self.flow_count, seed=seed,
            rejection_streak=self.rejection_streak)


@dataclass
class RouteParams:
    """Synthetic flows on a straight route: geometric spans, bandwidth B0 +- eps_B."""

    B0: float = 10.0
    eps_B: float = 0.2
    flows_per_link: float = 10.0
    # every link starts this far below capacity; `capacity` overrides it
    free_bw: float = 15.0
    capacity: float | None = None

    def validate(self):
        if self.B0 <= 0 or not (0 <= self.eps_B < 1):
            raise ConfigError("route_traffic needs B0 > 0 and 0 <= eps_B < 1")
        if self.flows_per_link < 0 or self.free_bw < 0:
            raise ConfigError("route_traffic flows_per_link and free_bw must be >= 0")
        if self.capacity is not None and self.capacity <= 0:
            raise ConfigError("route_traffic capacity must be positive")


@dataclass
class DemandParams:
    c_new: float = 20.0
    i_new: int = 2
    hop_range: list = field(default_factory=lambda: [8, 12])

    def validate(self):
        if self.c_new <= 0:
            raise ConfigError("c_new must be positive")
        if len(self.hop_range) != 2 or not (1 <= self.hop_range[0] <= self.hop_range[1]):
            raise ConfigError("hop_range must be [lo, hi] with 1 <= lo <= hi")
        self.hop_range = [int(x) for x in self.hop_range]


@dataclass
class SolverParams:
    T0: float = 3.0
    max_sweeps: int = 500
    stability_window: int = 3
    min_quiet_updates: int = 1000
    coupling: str = "cluster"
    repair: bool = True
    polish: bool = True
    keep_best: bool = True
    # None: twice the total weighted preemptible bandwidth
    beta: float | None = None

    def validate(self):
        try:
            self.gibbs(0, 0)
        except ValueError as e:
            raise ConfigError(f"solver: {e}") from None
        if self.beta is not None and self.beta <= 0:
            raise ConfigError("beta must be positive")

    def gibbs(self, n_d: int, seed: int) -> GibbsConfig:
        return GibbsConfig(N_d=n_d, coupling=self.coupling, T0=self.T0,
                           max_sweeps=self.max_sweeps, stability_window=self.stability_window,
                           min_quiet_updates=self.min_quiet_updates, seed=seed,
                           repair=self.repair, polish=self.polish, keep_best=self.keep_best,
                           record_trace=False)


@dataclass
class Grid:
    N_d: list | None = None
    p_c: list | None = None
    L: list | None = None
    c_new: list | None = None
    solvers: list | None = None

    def validate(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if not v:
                raise ConfigError(f"grid.{f.name} must be a non-empty list")
        if any(int(n) != n or n < 0 for n in self.N_d):
            raise ConfigError("grid.N_d entries must be integers >= 0")
        if any(not (0 < p < 1) for p in self.p_c):
            raise ConfigError("grid.p_c entries must lie in (0, 1)")
        if any(int(x) != x or x < 1 for x in self.L):
            raise ConfigError("grid.L entries must be integers >= 1")
        if any(c <= 0 for c in self.c_new):
            raise ConfigError("grid.c_new entries must be positive")
        bad = [s for s in self.solvers if s not in SOLVERS]
        if bad:
            raise ConfigError(f"unknown solvers {bad}; choose from {SOLVERS}")
        self.N_d = [int(n) for n in self.N_d]
        self.L = [int(x) for x in self.L]


@dataclass
class PijParams:
    samples: int = 1000
    route_length: int = 10
    max_h: int = 6

    def validate(self):
        if self.samples < 1 or self.route_length < 1 or self.max_h < 0:
            raise ConfigError("pij needs samples, route_length >= 1 and max_h >= 0")


@dataclass
class OracleParams:
    max_L: int = 6
    max_flows: int = 12

    def validate(self):
        if self.max_L < 1 or not (1 <= self.max_flows <= MAX_FLOWS):
            raise ConfigError(f"oracle needs max_L >= 1 and 1 <= max_flows <= {MAX_FLOWS}")


@dataclass
class BoundsParams:
    trials: int = 200
    d0: int = 4

    def validate(self):
        if self.trials < 1 or self.d0 < 2:
            raise ConfigError("bounds needs trials >= 1 and d0 >= 2")


_SECTIONS = {"topology": TopologyParams, "traffic": TrafficParams, "route_traffic": RouteParams,
             "demand": DemandParams, "solver": SolverParams, "grid": Grid, "pij": PijParams,
             "oracle": OracleParams, "bounds": BoundsParams}

_DEFAULT_GRIDS = {
    "table2_lattice": dict(N_d=[1, 2], p_c=[1 / 3], L=[10], c_new=[20.0],
                           solvers=["min_conn", "gibbs"]),
    "table3_powerlaw": dict(N_d=[1, 2], p_c=[1 / 3], L=[10], c_new=[20.0],
                            solvers=["min_conn", "gibbs"]),
    "fig3_pij": dict(N_d=[0], p_c=[1 / 3], L=[10], c_new=[20.0], solvers=["gibbs"]),
    "fig4_nd_pc_sweep": dict(N_d=[0, 1, 2, 3, 4], p_c=[0.3, 0.4, 0.5], L=[10], c_new=[20.0],
                             solvers=["gibbs"]),
    "fig5_length_sweep": dict(N_d=[0, 1, 2], p_c=[0.4], L=[5, 10, 20, 30, 40], c_new=[20.0],
                              solvers=["min_conn", "gibbs"]),
    "fig6_demand_sweep": dict(N_d=[1, 2], p_c=[0.4], L=[10], c_new=[10.0, 20.0, 30.0, 40.0],
                              solvers=["min_conn", "gibbs"]),
    "oracle_smallscale": dict(N_d=[1, 6], p_c=[1 / 3], L=[6], c_new=[20.0], solvers=["gibbs"]),
    "bounds_check": dict(N_d=[1, 2], p_c=[0.2, 1 / 3], L=[10], c_new=[20.0], solvers=["gibbs"]),
}

_DEFAULT_SECTIONS = {
    "table3_powerlaw": {"topology": {"type": "power_law"}, "demand": {"hop_range": [3, 12]}},
    "fig3_pij": {"topology": {"type": "lattice", "rows": 10, "cols": 25}},
    "bounds_check": {"route_traffic": {"flows_per_link": 2.0, "free_bw": 0.0,
                                       "capacity": 30.0}},
}


@dataclass
class ExperimentConfig:
    kind: str
    runs: int = 10
    seed: int = 0
    output: str | None = None
    topology: TopologyParams = field(default_factory=TopologyParams)
    traffic: TrafficParams = field(default_factory=TrafficParams)
    route_traffic: RouteParams = field(default_factory=RouteParams)
    demand: DemandParams = field(default_factory=DemandParams)
    solver: SolverParams = field(default_factory=SolverParams)
    grid: Grid = field(default_factory=Grid)
    pij: PijParams = field(default_factory=PijParams)
    oracle: OracleParams = field(default_factory=OracleParams)
    bounds: BoundsParams = field(default_factory=BoundsParams)

    def to_dict(self) -> dict:
        return json.loads(json.dumps(asdict(self)))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def _section(cls, doc: Any, where: str):
    if not isinstance(doc, dict):
        raise ConfigError(f"{where} must be an object")
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(doc) - known)
    if unknown:
        raise ConfigError(f"unknown keys in {where}: {unknown}")
    return doc


def config_from_dict(doc: dict) -> ExperimentConfig:
    _section(ExperimentConfig, doc, "config")
    kind = doc.get("kind")
    if kind not in KINDS:
        raise ConfigError(f"kind must be one of {KINDS}, got {kind!r}")
    top = {k: v for k, v in doc.items() if k not in _SECTIONS}
    if not isinstance(top.get("runs", 1), int) or top.get("runs", 1) < 1:
        raise ConfigError("runs must be an integer >= 1")
    if not isinstance(top.get("seed", 0), int):
        raise ConfigError("seed must be an integer")
    sections = {}
    for name, cls in _SECTIONS.items():
        given = dict(_DEFAULT_SECTIONS.get(kind, {}).get(name, {}))
        given.update(_section(cls, doc.get(name, {}), name))
        if name == "grid":
            given = {**_DEFAULT_GRIDS[kind], **{k: v for k, v in given.items() if v is not None}}
        try:
            obj = cls(**given)
        except TypeError as e:
            raise ConfigError(f"{name}: {e}") from None
        obj.validate()
        sections[name] = obj
    return ExperimentConfig(**top, **sections)


def parse_config_text(text: str, source: str = "<config>") -> ExperimentConfig:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"{source}:{e.lineno}:{e.colno}: {e.msg}") from None
    return config_from_dict(doc)


def parse_config(path) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config_text(fh.read(), str(path))


# -- results -------------------------------------------------------------------


SOLVER_COLUMNS = ["kind", "solver", "N_d", "p_c", "L", "c_new", "runs", "mean_bw", "std_bw",
                  "mean_cost", "mean_messages", "mean_sweeps", "feasible_rate",
                  "unrepaired_feasible_rate", "refused"]
PIJ_COLUMNS = ["kind", "h", "estimate", "stderr", "lemma2_lower", "lemma3_upper",
               "lemma3_asym3", "lemma3_asym2", "bracketed"]
ORACLE_COLUMNS = ["kind", "solver", "N_d", "instances", "optimal_rate", "feasible_rate",
                  "mean_delta", "refused"]
BOUNDS_COLUMNS = ["param_set", "value", "bound", "satisfied"]


@dataclass
class ExperimentResult:
    kind: str
    columns: list
    rows: list = field(default_factory=list)
    config: dict = field(default_factory=dict)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for r in self.rows:
            w.writerow([_cell(r.get(c)) for c in self.columns])
        return buf.getvalue()

    def to_json(self) -> str:
        doc = {"kind": self.kind, "columns": self.columns, "rows": self.rows,
               "config": self.config}
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"

    def select(self, **match) -> list[dict]:
        return [r for r in self.rows if all(r.get(k) == v for k, v in match.items())]


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return int(v)
    if isinstance(v, float):
        return repr(v)
    return v


def run_seeds(seed: int, runs: int) -> list[int]:
    """Independent per-run seeds, fixed by the experiment seed."""
    return [int(s) for s in np.random.SeedSequence(seed).generate_state(runs)]


class _Tally:
    """Per-solver accumulator over runs at one parameter point."""

    def __init__(self):
        self.bw, self.cost, self.messages, self.sweeps = [], [], [], []
        self.feasible, self.unrepaired = [], []
        self.refused = 0

    def add(self, inst: PreemptionInstance, res):
        self.bw.append(avg_preempted_bw(inst, res))
        self.cost.append(res.cost)
        self.messages.append(res.trace.messages_exchanged)
        self.sweeps.append(res.trace.sweeps_used)
        self.feasible.append(res.feasible)
        uf = res.trace.unrepaired_feasible
        self.unrepaired.append(res.feasible if uf is None else uf)

    def row(self, **keys) -> dict:
        n = len(self.bw)

        def mean(x):
            return float(np.mean(x)) if n else None

        return {**keys, "runs": n, "mean_bw": mean(self.bw),
                "std_bw": float(np.std(self.bw, ddof=1)) if n > 1 else (0.0 if n else None),
                "mean_cost": mean(self.cost), "mean_messages": mean(self.messages),
                "mean_sweeps": mean(self.sweeps), "feasible_rate": mean(self.feasible),
                "unrepaired_feasible_rate": mean(self.unrepaired), "refused": self.refused}


def _solver_plan(cfg: ExperimentConfig) -> list[tuple[str, int | None]]:
    plan = []
    for s in cfg.grid.solvers:
        if s == "gibbs":
            plan += [("gibbs", n) for n in cfg.grid.N_d]
        else:
            plan.append((s, None))
    return plan


def _solve(cfg: ExperimentConfig, name: str, n_d: int | None, inst: PreemptionInstance,
           seed: int):
    if name == "min_conn":
        return min_conn(inst)
    if name == "min_bw":
        return min_bw(inst)
    return gibbs_solve(inst, cfg.solver.gibbs(n_d, seed))


def _run_point(cfg: ExperimentConfig, instances: list[tuple[PreemptionInstance, int]],
               keys: dict) -> list[dict]:
    rows = []
    for name, n_d in _solver_plan(cfg):
        tally = _Tally()
        for inst, seed in instances:
            try:
                tally.add(inst, _solve(cfg, name, n_d, inst, seed))
            except ValueError:
                tally.refused += 1
        rows.append(tally.row(kind=cfg.kind, solver=name, N_d=n_d, **keys))
    return rows


def _with_beta(cfg: ExperimentConfig, inst: PreemptionInstance) -> PreemptionInstance:
    return inst if cfg.solver.beta is None else replace(inst, beta=cfg.solver.beta)


# -- network tables ------------------------------------------------------------


def pick_route(t: Topology, hop_range, rng: random.Random):
    """Random S-D pair among those whose hop distance lies in ``hop_range``."""
    lo, hi = hop_range
    pairs = []
    for s in range(t.node_count):
        dist = t.distances_from(s)
        pairs += [(s, d) for d in range(t.node_count) if d != s and lo <= dist[d] <= hi]
    if not pairs:
        raise ConfigError(f"no S-D pair with hop count in [{lo}, {hi}]")
    s, d = pairs[rng.randrange(len(pairs))]
    return shortest_path(t, s, d)


def network_instance(cfg: ExperimentConfig, seed: int, c_new: float | None = None):
    t = cfg.topology.build(seed)
    flows = generate_network_flows(t, cfg.traffic.to_config(seed))
    route = pick_route(t, cfg.demand.hop_range, random.Random(seed))
    inst = extract_instance(t, flows, route, c_new or cfg.demand.c_new, cfg.demand.i_new)
    return _with_beta(cfg, inst)


def _run_table(cfg: ExperimentConfig) -> ExperimentResult:
    res = ExperimentResult(cfg.kind, SOLVER_COLUMNS, config=cfg.to_dict())
    for c_new in cfg.grid.c_new:
        instances = [(network_instance(cfg, s, c_new), s) for s in run_seeds(cfg.seed, cfg.runs)]
        res.rows += _run_point(cfg, instances, {"c_new": c_new})
    return res


# -- synthetic route sweeps ----------------------------------------------------


def route_instance(cfg: ExperimentConfig, L: int, p_c: float, c_new: float,
                   seed: int) -> PreemptionInstance:
    r = cfg.route_traffic
    spec = RouteTrafficSpec(L=L, p_c=p_c, B0=r.B0, eps_B=r.eps_B,
                            flows_per_link=r.flows_per_link, seed=seed)
    inst = instance_from_span_flows(generate_route_flows(spec), L, c_new, cfg.demand.i_new,
                                    capacity=r.capacity, free_bw=r.free_bw)
    return _with_beta(cfg, inst)


def _run_route_sweep(cfg: ExperimentConfig) -> ExperimentResult:
    res = ExperimentResult(cfg.kind, SOLVER_COLUMNS, config=cfg.to_dict())
    seeds = run_seeds(cfg.seed, cfg.runs)
    for p_c in cfg.grid.p_c:
        for L in cfg.grid.L:
            for c_new in cfg.grid.c_new:
                instances = [(route_instance(cfg, L, p_c, c_new, s), s) for s in seeds]
                res.rows += _run_point(cfg, instances, {"p_c": p_c, "L": L, "c_new": c_new})
    return res


# -- link dependency -----------------------------------------------------------


def _run_pij(cfg: ExperimentConfig) -> ExperimentResult:
    res = ExperimentResult(cfg.kind, PIJ_COLUMNS, config=cfg.to_dict())
    t = cfg.topology.build(cfg.seed)
    p = cfg.pij
    dep = empirical_link_dependency(t, p.samples, cfg.runs, cfg.seed, p.route_length, p.max_h)
    L = p.route_length
    for h in range(1, p.max_h + 1):
        est, se = dep.estimate[h], dep.stderr[h]
        lower = lemma2_lower(L, cfg.bounds.d0, h)
        upper = lemma3_upper(L, h) if h >= 2 else None
        a3, a2 = lemma3_asymptotic_pair(L, h)
        ok = est >= lower - 2 * se and (upper is None or est <= upper + 2 * se)
        res.rows.append({"kind": cfg.kind, "h": h, "estimate": est, "stderr": se,
                         "lemma2_lower": lower, "lemma3_upper": upper, "lemma3_asym3": a3,
                         "lemma3_asym2": a2, "bracketed": ok})
    return res


# -- small-scale oracle comparison ---------------------------------------------


def random_small_instance(rng: np.random.Generator, max_L: int = 6, max_flows: int = 12,
                          p_c: float = 1 / 3) -> PreemptionInstance:
    """A random route problem that is feasible when every flow is preempted."""
    while True:
        L = int(rng.integers(2, max_L + 1))
        n = int(rng.integers(3, max_flows + 1))
        flows = []
        for k in range(1, n + 1):
            lo = int(rng.integers(1, L + 1))
            hi = lo
            while hi < L and rng.random() < p_c:
                hi += 1
            flows.append(RouteFlow(k, 1, float(rng.uniform(1.25, 2.5)), lo, hi))
        c_new = float(rng.uniform(2, 6))
        free = [float(rng.uniform(0, c_new)) for _ in range(L)]
        inst = make_instance(L, flows, free, c_new, 2)
        if feasible(inst, DecisionMatrix.from_global(inst, [f.k for f in flows])):
            return inst


def _run_oracle(cfg: ExperimentConfig) -> ExperimentResult:
    res = ExperimentResult(cfg.kind, ORACLE_COLUMNS, config=cfg.to_dict())
    o = cfg.oracle
    cases = []
    for s in run_seeds(cfg.seed, cfg.runs):
        inst = _with_beta(cfg, random_small_instance(np.random.default_rng(s), o.max_L,
                                                     o.max_flows, cfg.grid.p_c[0]))
        try:
            cases.append((inst, s, hamiltonian(inst, brute_force_optimal(inst).decisions)))
        except ValueError:
            cases.append((inst, s, None))
    for name, n_d in _solver_plan(cfg):
        optimal = feas = done = 0
        deltas = []
        for inst, s, h_star in cases:
            if h_star is None:
                continue
            got = _solve(cfg, name, n_d, inst, s)
            delta = abs(hamiltonian(inst, got.decisions) - h_star)
            deltas.append(delta)
            optimal += delta <= 1e-9
            feas += got.feasible
            done += 1
        res.rows.append({"kind": cfg.kind, "solver": name, "N_d": n_d, "instances": done,
                         "optimal_rate": optimal / done if done else None,
                         "feasible_rate": feas / done if done else None,
                         "mean_delta": float(np.mean(deltas)) if deltas else None,
                         "refused": len(cases) - done})
    return res


# -- near-optimality bound -----------------------------------------------------


def _run_bounds(cfg: ExperimentConfig) -> ExperimentResult:
    res = ExperimentResult(cfg.kind, BOUNDS_COLUMNS, config=cfg.to_dict())
    r = cfg.route_traffic
    for L in cfg.grid.L:
        for p_c in cfg.grid.p_c:
            for n_d in cfg.grid.N_d:
                for c_new in cfg.grid.c_new:
                    spec = RouteTrafficSpec(L=L, p_c=p_c, B0=r.B0, eps_B=r.eps_B,
                                            flows_per_link=r.flows_per_link)
                    rep = measure_delta_route(spec, c_new, cfg.solver.gibbs(n_d, 0),
                                              cfg.bounds.trials, cfg.seed,
                                              capacity=r.capacity, free_bw=r.free_bw)
                    res.rows.append({
                        "param_set": f"L={L};p_c={p_c:.4g};N_d={n_d};c_new={c_new:g};"
                                     f"eps_B={r.eps_B:g}",
                        "value": rep.mean, "bound": rep.bound,
                        "satisfied": rep.bound_satisfied})
    return res


_RUNNERS = {
    "table2_lattice": _run_table,
    "table3_powerlaw": _run_table,
    "fig3_pij": _run_pij,
    "fig4_nd_pc_sweep": _run_route_sweep,
    "fig5_length_sweep": _run_route_sweep,
    "fig6_demand_sweep": _run_route_sweep,
    "oracle_smallscale": _run_oracle,
    "bounds_check": _run_bounds,
}


def run_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    return _RUNNERS[cfg.kind](cfg)


def write_result(result: ExperimentResult, path, fmt: str = "csv") -> None:
    text = result.to_csv() if fmt == "csv" else result.to_json()
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
