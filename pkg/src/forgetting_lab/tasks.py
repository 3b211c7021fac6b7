"""Tasks, task collections, assumption checks and the minimum-norm offline solution."""

import json
from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .errors import InfeasibleError, InvalidInputError

NORM_SLACK = 1e-8
REALIZABILITY_TOLERANCE = 1e-8
COLLECTION_SCHEMA = "forgetting-lab/collection/v1"


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Task:
    """One regression problem ``X w = y``.

    The SVD-derived quantities are computed once at construction; every
    simulation step reuses them.
    """

    data: np.ndarray
    labels: np.ndarray
    projection: np.ndarray = field(init=False, repr=False)
    pinv: np.ndarray = field(init=False, repr=False)
    rank: int = field(init=False)
    spectral_norm: float = field(init=False)

    def __post_init__(self):
        x = linalg.as_matrix(self.data, "data")
        y = linalg.as_vector(self.labels, "labels")
        if y.size != x.shape[0]:
            raise InvalidInputError(f"{y.size} labels for a data matrix with {x.shape[0]} rows")
        res = linalg.svd(x)
        r = res.numerical_rank
        ns = res.null_space
        pinv = (res.right_basis[:, :r] / res.singular_values[:r]) @ res.left_basis[:, :r].T
        object.__setattr__(self, "data", _frozen(x))
        object.__setattr__(self, "labels", _frozen(y))
        object.__setattr__(self, "projection", _frozen(ns @ ns.T))
        object.__setattr__(self, "pinv", _frozen(pinv))
        object.__setattr__(self, "rank", r)
        object.__setattr__(self, "spectral_norm", float(res.singular_values[0]))

    @property
    def dimension(self):
        return self.data.shape[1]

    @property
    def rows(self):
        return self.data.shape[0]


@dataclass(frozen=True)
class ValidationReport:
    max_spectral_norm: float
    realizable: bool
    solution_norm: float
    per_task_residuals: np.ndarray
    rank_deficient: bool
    passed: bool

    def reasons(self):
        out = []
        if self.max_spectral_norm > 1 + NORM_SLACK:
            out.append(f"data spectral norm {self.max_spectral_norm:.6g} exceeds 1")
        if not self.realizable:
            out.append(f"tasks are not jointly realizable (max residual {self.per_task_residuals.max():.3g})")
        elif self.solution_norm > 1 + NORM_SLACK:
            out.append(f"offline solution norm {self.solution_norm:.6g} exceeds 1")
        if not self.rank_deficient:
            out.append("some task has full column rank")
        return out


def _stacked(tasks):
    return np.vstack([t.data for t in tasks]), np.concatenate([t.labels for t in tasks])


def _least_norm(tasks):
    x, y = _stacked(tasks)
    w = linalg.pseudo_inverse(x) @ y
    residuals = np.array([np.linalg.norm(t.data @ w - t.labels) for t in tasks])
    return w, residuals


class TaskCollection:
    """An immutable set of ``T`` tasks sharing the dimension ``d``."""

    def __init__(self, tasks):
        tasks = tuple(t if isinstance(t, Task) else Task(*t) for t in tasks)
        if not tasks:
            raise InvalidInputError("a task collection needs at least one task")
        d = tasks[0].dimension
        for i, t in enumerate(tasks, start=1):
            if t.dimension != d:
                raise InvalidInputError(f"task {i} has {t.dimension} columns, expected {d}")
        self.tasks = tasks
        self.dimension = d
        w, residuals = _least_norm(tasks)
        realizable = bool(residuals.max() <= REALIZABILITY_TOLERANCE)
        self._w = _frozen(w)
        self.offline_solution = self._w if realizable else None
        max_norm = max(t.spectral_norm for t in tasks)
        sol_norm = float(np.linalg.norm(w))
        rank_deficient = all(t.rank < d for t in tasks)
        self.validation = ValidationReport(
            max_spectral_norm=max_norm,
            realizable=realizable,
            solution_norm=sol_norm,
            per_task_residuals=_frozen(residuals),
            rank_deficient=rank_deficient,
            passed=(max_norm <= 1 + NORM_SLACK) and realizable
            and (sol_norm <= 1 + NORM_SLACK) and rank_deficient,
        )

    @classmethod
    def from_arrays(cls, matrices, labels):
        if len(matrices) != len(labels):
            raise InvalidInputError("matrices and labels differ in length")
        return cls([Task(x, y) for x, y in zip(matrices, labels)])

    def __len__(self):
        return len(self.tasks)

    def __getitem__(self, index):
        """1-based task lookup, matching the external task numbering."""
        if not 1 <= index <= len(self.tasks):
            raise InvalidInputError(f"task index {index} outside [1, {len(self.tasks)}]")
        return self.tasks[index - 1]

    @property
    def projections(self):
        return [t.projection for t in self.tasks]

    @property
    def max_rank(self):
        return max(t.rank for t in self.tasks)

    @property
    def average_rank(self):
        return sum(t.rank for t in self.tasks) / len(self.tasks)

    def to_dict(self):
        doc = {
            "schema": COLLECTION_SCHEMA,
            "dimension": self.dimension,
            "tasks": [
                {"rows": t.rows, "data": t.data.reshape(-1).tolist(), "labels": t.labels.tolist()}
                for t in self.tasks
            ],
        }
        if self.offline_solution is not None:
            doc["w_star"] = self.offline_solution.tolist()
        return doc

    @classmethod
    def from_dict(cls, doc):
        if doc.get("schema") != COLLECTION_SCHEMA:
            raise InvalidInputError(f"unsupported collection schema {doc.get('schema')!r}")
        try:
            d = int(doc["dimension"])
            tasks = []
            for entry in doc["tasks"]:
                rows = int(entry["rows"])
                data = np.asarray(entry["data"], dtype=float)
                if data.size != rows * d:
                    raise InvalidInputError(f"task data has {data.size} entries, expected {rows}x{d}")
                tasks.append(Task(data.reshape(rows, d), entry["labels"]))
        except (KeyError, TypeError) as exc:
            raise InvalidInputError(f"malformed collection document: {exc}") from exc
        return cls(tasks)

    def save(self, path):
        with open(path, "w") as f:
            json.dump(self.to_dict(), f, indent=1)

    @classmethod
    def load(cls, path):
        with open(path) as f:
            return cls.from_dict(json.load(f))


def validate_collection(s):
    return s.validation


def min_norm_solution(s):
    """``w* = X⁺ y`` for the stacked system; raises InfeasibleError if it does not fit every task."""
    if s.offline_solution is None:
        worst = float(s.validation.per_task_residuals.max())
        raise InfeasibleError(f"collection is not jointly realizable (max residual {worst:.3g})", worst)
    return s.offline_solution


def labels_from_solution(matrices, w_star):
    w = linalg.as_vector(w_star, "w_star")
    out = []
    for i, m in enumerate(matrices, start=1):
        x = linalg.as_matrix(m)
        if x.shape[1] != w.size:
            raise InvalidInputError(f"matrix {i} has {x.shape[1]} columns, w_star has {w.size} entries")
        out.append(x @ w)
    return out


def collection_from_solution(matrices, w_star):
    return TaskCollection.from_arrays(matrices, labels_from_solution(matrices, w_star))
