"""Centralized optimum by exhaustive search over consistent global decisions."""

from __future__ import annotations

import numpy as np

from ..model import BW_TOL, DecisionMatrix, PreemptionInstance
from .result import SolverResult, SolverTrace, finish

MAX_FLOWS = 24
_CHUNK_BITS = 16
_COST_TOL = 1e-9


def _bits(lo: int, hi: int, n: int) -> np.ndarray:
    masks = np.arange(lo, hi, dtype=np.int64)
    return ((masks[:, None] >> np.arange(n, dtype=np.int64)) & 1).astype(np.float64)


def brute_force_optimal(inst: PreemptionInstance) -> SolverResult:
    """Minimum weighted preempted bandwidth subject to every link fitting the new call.

    Ties go to fewer preempted flows, then to the lexicographically smallest
    sorted id list. With no feasible subset, every flow is preempted and
    the result is flagged infeasible.
    """
    flows = sorted(inst.flows, key=lambda f: f.k)
    n = len(flows)
    if n > MAX_FLOWS:
        raise ValueError(f"{n} flows exceeds the exhaustive-search limit of {MAX_FLOWS}")
    # bit j <-> flows[n-1-j]: a larger mask value is then lexicographically smaller
    order = flows[::-1]
    weight = np.array([inst.weight(f) for f in order])
    cover = np.zeros((n, inst.L))
    for j, f in enumerate(order):
        cover[j, f.lo - 1:f.hi] = f.bandwidth
    need = inst.c_new - np.asarray(inst.free_bw)

    best = None  # (cost, count, -mask)
    total = 1 << n
    step = 1 << _CHUNK_BITS
    for lo in range(0, total, step):
        hi = min(total, lo + step)
        bits = _bits(lo, hi, n)
        ok = np.all(bits @ cover >= need - BW_TOL, axis=1) if n else np.all(need <= BW_TOL)
        ok = np.broadcast_to(ok, (hi - lo,))
        if not ok.any():
            continue
        idx = np.nonzero(ok)[0]
        cost = bits[idx] @ weight
        cmin = cost.min()
        if best is not None and cmin > best[0] + _COST_TOL:
            continue
        near = idx[cost <= cmin + _COST_TOL]
        count = bits[near].sum(axis=1)
        near = near[count == count.min()]
        mask = int(lo + near.max())
        cand = (float(cmin), int(count.min()), -mask)
        if best is None or _better(cand, best):
            best = cand

    if best is None:
        chosen = [f.k for f in flows]
        ok = False
    else:
        mask = -best[2]
        chosen = [order[j].k for j in range(n) if mask >> j & 1]
        ok = True
    result = finish(inst, DecisionMatrix.from_global(inst, chosen), SolverTrace())
    result.feasible = result.feasible and ok
    return result


def _better(a, b) -> bool:
    if a[0] < b[0] - _COST_TOL:
        return True
    if a[0] > b[0] + _COST_TOL:
        return False
    return (a[1], a[2]) < (b[1], b[2])
