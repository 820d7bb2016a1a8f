from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, field

from ..model import DecisionMatrix, PreemptionInstance, feasible, global_decision, objective


@dataclass
class SweepRecord:
    sweep: int
    H: float
    Hl: float
    flips: int
    messages: int


@dataclass
class SolverTrace:
    sweeps: list[SweepRecord] = field(default_factory=list)
    sweeps_used: int = 0
    messages_exchanged: int = 0
    converged: bool = False
    repaired: bool = False
    polish_flips: int = 0
    polish_passes: int = 0
    # sweep whose state was kept (0: the last one)
    best_sweep: int = 0
    # state before any repair, so the bare algorithm stays measurable
    unrepaired_cost: float | None = None
    unrepaired_feasible: bool | None = None
    f_max: int = 0
    n_d: int = 0

    @property
    def iterations(self) -> int:
        """Sampling sweeps plus polish passes: every pass is one round of neighbour reads."""
        return self.sweeps_used + self.polish_passes

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["sweep", "H", "Hl", "flips", "messages"])
        for r in self.sweeps:
            w.writerow([r.sweep, repr(r.H), repr(r.Hl), r.flips, r.messages])
        return buf.getvalue()


@dataclass
class SolverResult:
    decisions: DecisionMatrix
    global_: dict[int, int]
    cost: float
    feasible: bool
    trace: SolverTrace

    @property
    def preempted(self) -> list[int]:
        return sorted(k for k, v in self.global_.items() if v)

    def to_dict(self) -> dict:
        return {
            "decisions": [[i, k, v] for (i, k), v in sorted(self.decisions.items())],
            "global": {str(k): v for k, v in sorted(self.global_.items())},
            "preempted": self.preempted,
            "cost": self.cost,
            "feasible": self.feasible,
            "trace": asdict(self.trace),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def finish(inst: PreemptionInstance, d: DecisionMatrix, trace: SolverTrace) -> SolverResult:
    g = global_decision(inst, d)
    return SolverResult(d, g, objective(inst, g), feasible(inst, d), trace)
