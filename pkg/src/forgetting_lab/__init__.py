"""Simulation and bounds for forgetting in continual linear regression."""

from .errors import InfeasibleError, InvalidInputError
from .learner import Trajectory, average_iterates, fit_step, run, run_projected
from .metrics import (
    ExpectedForgettingEstimate,
    ForgettingRecord,
    exact_expected_forgetting,
    expected_forgetting,
    forgetting,
    forgetting_curve,
)
from .orderings import Ordering, realize
from .tasks import Task, TaskCollection, min_norm_solution, validate_collection

__version__ = "0.1.0"

__all__ = [
    "ExpectedForgettingEstimate",
    "ForgettingRecord",
    "InfeasibleError",
    "InvalidInputError",
    "Ordering",
    "Task",
    "TaskCollection",
    "Trajectory",
    "average_iterates",
    "exact_expected_forgetting",
    "expected_forgetting",
    "fit_step",
    "forgetting",
    "forgetting_curve",
    "min_norm_solution",
    "realize",
    "run",
    "run_projected",
    "validate_collection",
]
