from .baselines import min_bw, min_conn
from .exact import brute_force_optimal
from .gibbs import GibbsConfig, gibbs_solve, repair
from .result import SolverResult, SolverTrace, SweepRecord

__all__ = [
    "GibbsConfig", "SolverResult", "SolverTrace", "SweepRecord",
    "brute_force_optimal", "gibbs_solve", "min_bw", "min_conn", "repair",
]
