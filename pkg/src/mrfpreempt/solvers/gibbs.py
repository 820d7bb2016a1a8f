"""Distributed preemption by stochastic relaxation.

Every (link, flow) vote is resampled from its two-state conditional under
the truncated energy, at temperature ``T0 / log(1 + t)`` for sweep ``t``.
The conditional at link ``i`` reads only the link's own votes and the votes
on the same flow from links at most ``N_d`` hops away, which is what the
link would receive from its neighbours.

Two local energies are available. ``pairwise`` keeps single votes minus
vote pairs at most ``N_d`` apart; past one hop it rewards long flows for
every extra vote and can go negative. ``cluster`` (the default) charges a
flow once per group of votes no more than ``N_d`` links apart, which is the
same thing for ``N_d <= 1``, never undercuts the exact energy, and equals it
once ``N_d`` covers the flow.

With ``keep_best`` the lowest truncated energy seen at the end of any
sweep is kept and polished, instead of the last sample. That needs one
scalar per link per sweep summed over the route, the same kind of
route-wide aggregate that detecting "no flips anywhere" already needs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numba
import numpy as np

from ..model import BW_TOL, DecisionMatrix, PreemptionInstance
from .result import SolverResult, SolverTrace, SweepRecord, finish

POLISH_PASSES = 100
COUPLINGS = ("cluster", "pairwise")


@dataclass
class GibbsConfig:
    N_d: int = 1
    # "cluster": a flow costs its weight once per group of votes no more than
    # N_d links apart. "pairwise": first- minus second-order terms within N_d.
    # The two agree for N_d <= 1.
    coupling: str = "cluster"
    T0: float = 3.0
    max_sweeps: int = 500
    stability_window: int = 3
    # equilibrium also needs this many consecutive updates without a flip,
    # so a handful of votes cannot look settled after a few lucky sweeps
    min_quiet_updates: int = 1000
    seed: int = 0
    repair: bool = False
    polish: bool = True
    keep_best: bool = True
    record_trace: bool = True

    def __post_init__(self):
        if self.N_d < 0:
            raise ValueError("N_d must be >= 0")
        if self.coupling not in COUPLINGS:
            raise ValueError(f"coupling must be one of {COUPLINGS}")
        if self.T0 <= 0:
            raise ValueError("T0 must be positive")
        if self.max_sweeps < 1:
            raise ValueError("max_sweeps must be >= 1")
        if self.stability_window < 1:
            raise ValueError("stability_window must be >= 1")


class _Layout:
    """Incidences laid out flow-major, so a flow's votes are one contiguous block."""

    def __init__(self, inst: PreemptionInstance):
        keys, link, start, end, w, bw = [], [], [], [], [], []
        for f in inst.flows:
            s = len(keys)
            for i in f.links:
                keys.append((i, f.k))
                link.append(i - 1)
            e = len(keys)
            start += [s] * f.span
            end += [e] * f.span
            w += [inst.weight(f)] * f.span
            bw += [f.bandwidth] * f.span
        self.keys = keys
        self.link = np.array(link, dtype=np.int64)
        self.start = np.array(start, dtype=np.int64)
        self.end = np.array(end, dtype=np.int64)
        self.w = np.array(w, dtype=np.float64)
        self.bw = np.array(bw, dtype=np.float64)
        self.free = np.array(inst.free_bw, dtype=np.float64)
        # deterministic visiting order for the polish: by link, then flow id
        self.sorted_order = np.array(sorted(range(len(keys)), key=lambda p: keys[p]),
                                     dtype=np.int64)

    def avail(self, d: np.ndarray) -> np.ndarray:
        a = self.free.copy()
        np.add.at(a, self.link, self.bw * d)
        return a

    def to_matrix(self, d: np.ndarray) -> DecisionMatrix:
        return DecisionMatrix(zip(self.keys, (int(v) for v in d)))


@numba.njit(cache=True)
def _delta(p, d, avail, link, start, end, w, bw, n_d, cluster, c_new, beta):
    """Energy of vote=1 minus energy of vote=0 at incidence ``p``; also the neighbour count."""
    lo = max(start[p], p - n_d)
    hi = min(end[p] - 1, p + n_d)
    m = 0
    if cluster:
        # each side holds at most one group; both sides may already be one group
        left = 0
        for q in range(lo, p):
            left |= d[q]
        first = -1
        for q in range(p + 1, hi + 1):
            if d[q]:
                first = q
                break
        m = left
        if first >= 0:
            m += 1
            if left:
                for q in range(max(start[p], first - n_d), p):
                    if d[q]:
                        m -= 1
                        break
    else:
        for q in range(lo, hi + 1):
            if q != p:
                m += d[q]
    without = avail[link[p]] - bw[p] * d[p]
    u0 = 1.0 if c_new - without > BW_TOL else 0.0
    u1 = 1.0 if c_new - (without + bw[p]) > BW_TOL else 0.0
    return w[p] * (1 - m) + beta * (u1 - u0), hi - lo


@numba.njit(cache=True)
def _sweep(order, uniforms, temp, d, avail, link, start, end, w, bw, n_d, cluster, c_new, beta):
    flips = 0
    messages = 0
    for r in range(order.shape[0]):
        p = order[r]
        de, contacted = _delta(p, d, avail, link, start, end, w, bw, n_d, cluster, c_new, beta)
        messages += contacted
        x = de / temp
        if x > 700.0:
            p1 = 0.0
        elif x < -700.0:
            p1 = 1.0
        else:
            p1 = 1.0 / (1.0 + math.exp(x))
        new = 1 if uniforms[r] < p1 else 0
        if new != d[p]:
            avail[link[p]] += bw[p] * (new - d[p])
            d[p] = new
            flips += 1
    return flips, messages


@numba.njit(cache=True)
def _polish(order, d, avail, link, start, end, w, bw, n_d, cluster, c_new, beta, max_passes):
    """Greedy passes taking only flips that strictly lower the truncated energy."""
    flips = 0
    messages = 0
    passes = 0
    for _ in range(max_passes):
        passes += 1
        changed = 0
        for r in range(order.shape[0]):
            p = order[r]
            de, contacted = _delta(p, d, avail, link, start, end, w, bw, n_d, cluster, c_new, beta)
            messages += contacted
            gain = de if d[p] == 0 else -de
            if gain < -1e-12:
                new = 1 - d[p]
                avail[link[p]] += bw[p] * (new - d[p])
                d[p] = new
                changed += 1
        flips += changed
        if changed == 0:
            break
    return flips, messages, passes


@numba.njit(cache=True)
def _energies(d, avail, start, end, w, n_d, cluster, c_new, beta, L):
    """Exact energy H and truncated energy Hl of the current votes."""
    exact = 0.0
    local = 0.0
    p = 0
    n = d.shape[0]
    while p < n:
        e = end[p]
        any_on = 0
        for a in range(p, e):
            if d[a]:
                any_on = 1
                if cluster:
                    lone = 1
                    for b in range(max(p, a - n_d), a):
                        if d[b]:
                            lone = 0
                    local += w[a] * lone
                else:
                    local += w[a]
                    for b in range(a + 1, min(e, a + n_d + 1)):
                        local -= w[a] * d[b]
        exact += w[p] * any_on
        p = e
    pen = 0.0
    for i in range(L):
        if c_new - avail[i] > BW_TOL:
            pen += beta
    return exact + pen, local + pen


def repair(inst: PreemptionInstance, d: DecisionMatrix) -> tuple[DecisionMatrix, bool]:
    """Patch remaining violations with extra preemptions.

    At each short link, votes for flows already preempted elsewhere are free
    and taken first; after that the cheapest flows by weighted bandwidth.
    A newly preempted flow gets votes on its whole span.
    """
    d = DecisionMatrix(d)
    changed = False
    by_id = inst.by_id()
    for i in range(1, inst.L + 1):
        here = inst.flows_at(i)
        avail = inst.free_bw[i - 1] + sum(f.bandwidth for f in here if d[(i, f.k)])
        if inst.c_new - avail <= BW_TOL:
            continue
        preempted = {k for (j, k), v in d.items() if v}
        ranked = sorted((f for f in here if not d[(i, f.k)]),
                        key=lambda f: (f.k not in preempted, inst.weight(f), f.k))
        for f in ranked:
            if inst.c_new - avail <= BW_TOL:
                break
            for j in by_id[f.k].links:
                d[(j, f.k)] = 1
            avail += f.bandwidth
            changed = True
    return d, changed


def gibbs_solve(inst: PreemptionInstance, cfg: GibbsConfig | None = None) -> SolverResult:
    cfg = cfg or GibbsConfig()
    lay = _Layout(inst)
    n = len(lay.keys)
    d = np.zeros(n, dtype=np.int64)
    avail = lay.avail(d)
    rng = np.random.default_rng(cfg.seed)
    trace = SolverTrace(n_d=cfg.N_d,
                        f_max=max((len(inst.flows_at(i)) for i in range(1, inst.L + 1)),
                                  default=0))
    cluster = cfg.coupling == "cluster"
    args = (lay.link, lay.start, lay.end, lay.w, lay.bw, cfg.N_d, cluster, inst.c_new, inst.beta)
    quiet = 0
    best_energy, best = math.inf, d.copy()
    if n == 0:
        trace.converged = True
    for t in range(1, cfg.max_sweeps + 1 if n else 1):
        temp = cfg.T0 / math.log(1.0 + t)
        order = rng.permutation(n)
        uniforms = rng.random(n)
        flips, msgs = _sweep(order, uniforms, temp, d, avail, *args)
        trace.messages_exchanged += int(msgs)
        trace.sweeps_used = t
        if cfg.record_trace or cfg.keep_best:
            H, Hl = _energies(d, avail, lay.start, lay.end, lay.w, cfg.N_d, cluster,
                              inst.c_new, inst.beta, inst.L)
            if cfg.record_trace:
                trace.sweeps.append(SweepRecord(t, float(H), float(Hl), int(flips), int(msgs)))
            if Hl < best_energy - 1e-12:
                best_energy, best = Hl, d.copy()
                trace.best_sweep = t
        quiet = quiet + 1 if flips == 0 else 0
        if quiet >= cfg.stability_window and quiet * n >= cfg.min_quiet_updates:
            trace.converged = True
            break
    if cfg.keep_best and trace.best_sweep:
        d = best
        avail = lay.avail(d)
    if cfg.polish and n:
        pflips, pmsgs, passes = _polish(lay.sorted_order, d, avail, *args, POLISH_PASSES)
        trace.polish_flips = int(pflips)
        trace.polish_passes = int(passes)
        trace.messages_exchanged += int(pmsgs)
        if cfg.record_trace:
            H, Hl = _energies(d, avail, lay.start, lay.end, lay.w, cfg.N_d, cluster,
                              inst.c_new, inst.beta, inst.L)
            trace.sweeps.append(SweepRecord(trace.sweeps_used + 1, float(H), float(Hl),
                                            int(pflips), int(pmsgs)))
    matrix = lay.to_matrix(d)
    result = finish(inst, matrix, trace)
    trace.unrepaired_cost = result.cost
    trace.unrepaired_feasible = result.feasible
    if cfg.repair and not result.feasible:
        matrix, trace.repaired = repair(inst, matrix)
        result = finish(inst, matrix, trace)
    return result
