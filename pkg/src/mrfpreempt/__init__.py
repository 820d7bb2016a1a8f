"""Connection preemption on a route as energy minimisation over per-link votes."""

__version__ = "0.1.0"
