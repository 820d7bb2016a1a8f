"""Closed-form dependency and near-optimality bounds, and Monte-Carlo checks against them."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .model import PreemptionInstance, hamiltonian, instance_from_span_flows
from .solvers import GibbsConfig, SolverResult, SolverTrace, brute_force_optimal, gibbs_solve
from .traffic import RouteTrafficSpec, generate_route_flows


@dataclass(frozen=True)
class BoundParams:
    L: int
    p_c: float
    N_d: int
    c_new: float
    eps_B: float = 0.0
    d0: int = 4
    epsilon: float = 1.0

    def __post_init__(self):
        if self.L < 1:
            raise ValueError("L must be >= 1")
        if self.d0 < 2:
            raise ValueError("d0 must be >= 2")
        if not (0 < self.p_c < 1):
            raise ValueError("p_c must lie in (0, 1)")
        if not (0 <= self.eps_B < 1):
            raise ValueError("eps_B must lie in [0, 1)")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if self.N_d < 0:
            raise ValueError("N_d must be >= 0")


def _room(L: int, h: int) -> float:
    return (L - h) / L


def lemma2_lower(L: int, d0: int, h: int) -> float:
    """Geometric lower bound on the chance a flow uses two route links ``h`` apart."""
    if not (1 <= h <= L):
        raise ValueError(f"need 1 <= h <= L, got h={h}, L={L}")
    if d0 < 2:
        raise ValueError("d0 must be >= 2")
    return _room(L, h) * (1.0 / (d0 - 1)) ** h


def lemma3_upper(L: int, h: int) -> float:
    """Path-counting upper bound on the same probability for a degree-4 lattice.

    Odd ``h`` uses the central binomial ``C(h, h // 2)``, the largest of
    the ``C(h, k)``.
    """
    if h < 2:
        raise ValueError("upper bound is defined for h >= 2")
    if h > L:
        raise ValueError(f"h={h} exceeds L={L}")
    paths = math.comb(h, h // 2)
    ring = (2 if h == 2 else 3) * (2 ** h - 1)
    return _room(L, h) * paths / ring


def lemma3_upper_asymptotic(L: int, h: int, constant: float = 3.0) -> float:
    """Stirling form ``(L-h)/L / (constant * sqrt(2 pi h))``.

    The bound's statement carries ``constant=3``; carrying the Stirling
    step through the counting argument gives ``constant=2``. Both are
    exposed; see :func:`lemma3_asymptotic_pair`.
    """
    if h < 1 or h > L:
        raise ValueError(f"need 1 <= h <= L, got h={h}, L={L}")
    return _room(L, h) / (constant * math.sqrt(2 * math.pi * h))


def lemma3_asymptotic_pair(L: int, h: int) -> tuple[float, float]:
    return lemma3_upper_asymptotic(L, h, 3.0), lemma3_upper_asymptotic(L, h, 2.0)


def _bw_factor(eps_B: float) -> float:
    return (1 + eps_B) / (1 - eps_B)


def theorem1_bound(p: BoundParams) -> float:
    """Upper bound on the expected energy gap between truncated and exact optima."""
    if p.N_d >= p.L:
        raise ValueError("bound needs N_d < L")
    a = 2 * p.c_new * _bw_factor(p.eps_B)
    # expm1/log1p keep the tiny-p_c^N_d regime from rounding to zero
    return a * p.L * math.expm1((p.L - p.N_d) * math.log1p(p.p_c ** p.N_d))


def theorem1_bound_approx(p: BoundParams) -> float | None:
    """Leading term ``A L (L - N_d) p_c^N_d``; ``None`` unless ``p_c^N_d L < 0.1``."""
    if p.N_d >= p.L:
        raise ValueError("bound needs N_d < L")
    if p.p_c ** p.N_d * p.L >= 0.1:
        return None
    a = 2 * p.c_new * _bw_factor(p.eps_B)
    return a * p.L * (p.L - p.N_d) * p.p_c ** p.N_d


def corollary1_min_nd(p: BoundParams) -> int | None:
    """Smallest neighbourhood whose bound is within ``epsilon``, or ``None`` if none below ``L``.

    Found by scanning the bound itself; ``p.N_d`` is ignored.
    """
    for n_d in range(p.L):
        if theorem1_bound(replace(p, N_d=n_d)) <= p.epsilon:
            return n_d
    return None


# -- measured near-optimality ---------------------------------------------------


@dataclass
class DeltaReport:
    deltas: list[float]
    bound: float | None = None
    params: dict = field(default_factory=dict)

    @property
    def trials(self) -> int:
        return len(self.deltas)

    @property
    def mean(self) -> float:
        return float(np.mean(self.deltas)) if self.deltas else 0.0

    @property
    def stderr(self) -> float:
        if len(self.deltas) < 2:
            return 0.0
        return float(np.std(self.deltas, ddof=1) / math.sqrt(len(self.deltas)))

    @property
    def bound_satisfied(self) -> bool | None:
        return None if self.bound is None else self.mean <= self.bound


def _trial_seeds(seed: int, trials: int) -> list[int]:
    return [int(s) for s in np.random.SeedSequence(seed).generate_state(trials)]


def energy_gap(inst: PreemptionInstance, cfg: GibbsConfig) -> float:
    best = brute_force_optimal(inst)
    got = gibbs_solve(inst, cfg)
    return abs(hamiltonian(inst, best.decisions) - hamiltonian(inst, got.decisions))


def measure_delta(inst: PreemptionInstance, gibbs_cfg: GibbsConfig, trials: int,
                  seed: int, bound: float | None = None) -> DeltaReport:
    """Gap between the exact optimum and repeated sampler runs on one instance."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    best = brute_force_optimal(inst)
    h_star = hamiltonian(inst, best.decisions)
    deltas = []
    for s in _trial_seeds(seed, trials):
        got = gibbs_solve(inst, replace(gibbs_cfg, seed=s, record_trace=False))
        deltas.append(abs(h_star - hamiltonian(inst, got.decisions)))
    return DeltaReport(deltas, bound)


def measure_delta_route(spec: RouteTrafficSpec, c_new: float, gibbs_cfg: GibbsConfig,
                        trials: int, seed: int, capacity: float | None = None,
                        free_bw: float = 0.0) -> DeltaReport:
    """Gap over fresh geometric route flows per trial, set against the closed-form bound."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    deltas = []
    for s in _trial_seeds(seed, trials):
        flows = generate_route_flows(replace(spec, seed=s))
        inst = instance_from_span_flows(flows, spec.L, c_new, capacity=capacity,
                                        free_bw=free_bw)
        deltas.append(energy_gap(inst, replace(gibbs_cfg, seed=s, record_trace=False)))
    bound = theorem1_bound(BoundParams(spec.L, spec.p_c, gibbs_cfg.N_d, c_new, spec.eps_B))
    params = {"L": spec.L, "p_c": spec.p_c, "N_d": gibbs_cfg.N_d, "c_new": c_new,
              "eps_B": spec.eps_B, "B0": spec.B0}
    return DeltaReport(deltas, bound, params)


def avg_preempted_bw(inst: PreemptionInstance, result: SolverResult) -> float:
    """Preempted bandwidth per route link; pieces of one network flow count once."""
    seen = {}
    for f in inst.flows:
        if result.global_[f.k]:
            seen[f.origin if f.origin is not None else ("k", f.k)] = f.bandwidth
    return sum(seen.values()) / inst.L


@dataclass(frozen=True)
class Complexity:
    messages: int
    envelope: int  # N_d * f_max * iterations


def communication_complexity(trace: SolverTrace) -> Complexity:
    return Complexity(trace.messages_exchanged, trace.n_d * trace.f_max * trace.iterations)


def bounds_csv(rows: list[dict]) -> str:
    """Rows of ``{param_set, value, bound, satisfied}`` as CSV."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["param_set", "value", "bound", "satisfied"])
    for r in rows:
        w.writerow([r["param_set"], repr(float(r["value"])), repr(float(r["bound"])),
                    int(bool(r["satisfied"]))])
    return buf.getvalue()
