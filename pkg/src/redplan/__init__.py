"""Redundancy planning for replicated task batches."""

from .assignment import (
    AssignmentVector,
    BatchingPlan,
    balanced_plan,
    covering_probability,
    custom_overlapping_plan,
    cyclic_plan,
    majorizes,
    plan_from_vector,
    random_plan,
    stirling2,
)
from .distributions import Empirical, Exp, Pareto, SExp, classify_tail, fit_pareto, fit_sexp
from .errors import DomainError
from .optimizer import feasible_B, pareto_alpha_star, sweep
from .simulation import SimConfig, SimResult, compare_schemes, job_time_once, simulate

__version__ = "0.1.0"
