"""Decentralized per-link rules: every short link fixes itself, no messages."""

from __future__ import annotations

import numpy as np

from ..model import BW_TOL, DecisionMatrix, PreemptionInstance
from .result import SolverResult, SolverTrace, finish

MAX_LOCAL_FLOWS = 20


def min_conn(inst: PreemptionInstance) -> SolverResult:
    """Largest flows first at each short link, i.e. as few local preemptions as possible."""
    d = DecisionMatrix.zeros(inst)
    ok = True
    for i in range(1, inst.L + 1):
        avail = inst.free_bw[i - 1]
        if inst.c_new - avail <= BW_TOL:
            continue
        for f in sorted(inst.flows_at(i), key=lambda f: (-f.bandwidth, f.k)):
            d[(i, f.k)] = 1
            avail += f.bandwidth
            if inst.c_new - avail <= BW_TOL:
                break
        else:
            ok = False
    result = finish(inst, d, SolverTrace())
    result.feasible = result.feasible and ok
    return result


def min_bw(inst: PreemptionInstance) -> SolverResult:
    """Cheapest local subset (weighted bandwidth) at each short link, by enumeration.

    Ties go to fewer flows, then to smaller flow ids.
    """
    d = DecisionMatrix.zeros(inst)
    ok = True
    for i in range(1, inst.L + 1):
        need = inst.c_new - inst.free_bw[i - 1]
        if need <= BW_TOL:
            continue
        here = sorted(inst.flows_at(i), key=lambda f: f.k)
        n = len(here)
        if n > MAX_LOCAL_FLOWS:
            raise ValueError(f"link {i} carries {n} preemptible flows; limit is {MAX_LOCAL_FLOWS}")
        # bit j <-> here[n-1-j], so among ties the largest mask has the smallest ids
        rev = here[::-1]
        bw = _subset_sums([f.bandwidth for f in rev])
        cost = _subset_sums([inst.weight(f) for f in rev])
        count = _subset_sums([1.0] * n)
        good = bw >= need - BW_TOL
        if not good.any():
            ok = False
            for f in here:
                d[(i, f.k)] = 1
            continue
        cmin = cost[good].min()
        tied = good & (cost <= cmin + 1e-9)
        tied &= count == count[tied].min()
        pick = int(np.nonzero(tied)[0].max())
        for j, f in enumerate(rev):
            if pick >> j & 1:
                d[(i, f.k)] = 1
    result = finish(inst, d, SolverTrace())
    result.feasible = result.feasible and ok
    return result


def _subset_sums(values) -> np.ndarray:
    """``out[mask]`` = sum of ``values[j]`` over the bits ``j`` set in ``mask``."""
    out = np.zeros(1)
    for v in values:
        out = np.concatenate([out, out + v])
    return out
