"""Generators for explicit task collections.

Planar collections place each task's one-dimensional solution direction in the
plane of the first two coordinates; every non-zero singular value of every
data matrix is 1, so the residual upper bound on forgetting is attained.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError
from .orderings import Ordering
from .tasks import collection_from_solution


@dataclass(frozen=True)
class PlanarSpec:
    """``shared`` decides what happens to coordinates 3..d: ``"data"`` adds them
    as identical data rows to every task (rank d-1), ``"null"`` leaves them in
    every null space (rank 1). Forgetting is the same either way."""

    solution_angles: tuple
    dimension: int = 2
    solution_norm: float = 1.0
    shared: str = "data"
    w_star_angle: float | None = None

    def __post_init__(self):
        angles = tuple(float(a) for a in np.atleast_1d(self.solution_angles))
        if not angles or not all(math.isfinite(a) for a in angles):
            raise InvalidInputError("need at least one finite solution angle")
        if self.dimension < 2:
            raise InvalidInputError("planar collections need dimension >= 2")
        if not 0 < self.solution_norm <= 1:
            raise InvalidInputError("solution_norm must lie in (0, 1]")
        if self.shared not in ("data", "null"):
            raise InvalidInputError(f"unknown shared mode {self.shared!r}")
        object.__setattr__(self, "solution_angles", angles)


def _planar_unit(angle, d):
    v = np.zeros(d)
    v[0], v[1] = math.cos(angle), math.sin(angle)
    return v


def planar_collection(spec):
    d = spec.dimension
    extra = np.eye(d)[2:] if spec.shared == "data" else np.zeros((0, d))
    matrices = []
    for phi in spec.solution_angles:
        normal = _planar_unit(phi + math.pi / 2, d)
        matrices.append(np.vstack([normal, extra]))
    psi = spec.solution_angles[0] if spec.w_star_angle is None else spec.w_star_angle
    w_star = spec.solution_norm * _planar_unit(psi, d)
    return collection_from_solution(matrices, w_star)


def two_task_collection(theta, dimension=2, solution_norm=1.0):
    """Two rank d-1 tasks whose solution directions meet at ``theta``.

    With w* along the first direction this attains both the two-task
    forgetting bound and the distance bound with equality.
    """
    return planar_collection(PlanarSpec((0.0, theta), dimension, solution_norm))


def _ceil(x):
    return math.ceil(x - 1e-9)


def adversarial_sizes(epsilon):
    if not 0 < epsilon < 1:
        raise InvalidInputError("epsilon must lie in (0, 1)")
    k1 = _ceil((72 - 12 * epsilon) / epsilon**2 + 1)
    k2 = _ceil(12 / epsilon)
    theta = math.sqrt(epsilon / 6)
    return k1, k2, theta


def adversarial_identity(epsilon, dimension=2):
    """Identity-ordered collection whose final forgetting exceeds ``1 - epsilon``.

    ``k1`` directions equally spaced on [0, theta] (endpoints included) are
    followed by ``k2`` directions equally spaced on (theta, pi/2].
    """
    k1, k2, theta = adversarial_sizes(epsilon)
    first = np.linspace(0.0, theta, k1)
    second = theta + (math.pi / 2 - theta) * np.arange(1, k2 + 1) / k2
    angles = np.concatenate([first, second])
    s = planar_collection(PlanarSpec(tuple(angles), dimension))
    return s, Ordering.identity(len(angles))


def back_and_forth_angles(T, k):
    if T < 3:
        raise InvalidInputError("back-and-forth needs T >= 3")
    if k % T:
        raise InvalidInputError(f"k={k} is not a multiple of T={T}")
    if k // T < T:
        raise InvalidInputError(f"need at least T={T} cycles, got {k // T}")
    theta = math.sqrt(1.0 / (k - 1))
    half = [i * theta for i in range((T + 1) // 2)]
    return half + half[: T // 2][::-1]


def back_and_forth(T, k, dimension=2):
    """Directions step by ``sqrt(1/(k-1))`` up to the middle task and back down.

    Task m and task T-m+1 coincide, which makes the cyclic operator symmetric.
    """
    s = planar_collection(PlanarSpec(tuple(back_and_forth_angles(T, k)), dimension))
    return s, Ordering.cyclic(T)


def fig5_collection(T=128):
    """The 128-task planar back-and-forth collection in two dimensions, tuned to T^2 iterations."""
    s, _ = back_and_forth(T, T * T)
    return s


def cyclic_operator(s):
    m = np.eye(s.dimension)
    for p in s.projections:
        m = p @ m
    return m


def _random_orthogonal(rng, d):
    q, r = np.linalg.qr(rng.standard_normal((d, d)))
    return q * np.sign(np.diag(r))


def _matrix_on(rng, basis, rows=None):
    r = basis.shape[1]
    rows = rows or r
    x = rng.standard_normal((rows, r)) @ basis.T
    return x / np.linalg.norm(x, 2) * rng.uniform(0.5, 1.0)


def _random_w(rng, d):
    w = rng.standard_normal(d)
    return w / np.linalg.norm(w) * rng.uniform(0.2, 1.0)


NO_FORGETTING_CONDITIONS = ("row_subset", "row_superset", "in_null", "covers_null")


def no_forgetting_pair(rng, d, condition):
    """Random two-task collection whose principal angles are all 0 or pi/2.

    ``row_subset``/``row_superset``: the second row space lies inside / contains
    the first. ``in_null``/``covers_null``: the second row space lies inside /
    contains the null space of the first.
    """
    if d < 2:
        raise InvalidInputError("need d >= 2")
    q = _random_orthogonal(rng, d)
    r1 = int(rng.integers(1, d))
    if condition == "row_subset":
        r2 = int(rng.integers(1, r1 + 1))
        b1, b2 = q[:, :r1], q[:, :r2]
    elif condition == "row_superset":
        r2 = int(rng.integers(r1, d))
        b1, b2 = q[:, :r1], q[:, :r2]
    elif condition == "in_null":
        r2 = int(rng.integers(1, d - r1 + 1))
        b1, b2 = q[:, :r1], q[:, r1 : r1 + r2]
    elif condition == "covers_null":
        j = int(rng.integers(0, r1))
        b1, b2 = q[:, :r1], np.hstack([q[:, r1:], q[:, :j]])
    else:
        raise InvalidInputError(f"unknown condition {condition!r}")
    mats = [_matrix_on(rng, b1, b1.shape[1] + 1), _matrix_on(rng, b2)]
    return collection_from_solution(mats, _random_w(rng, d))


def random_collection(rng, d, T):
    """Random valid collection: ranks in [1, d-1], spectral norms <= 1, ||w*|| <= 1."""
    if d < 2:
        raise InvalidInputError("need d >= 2")
    mats = []
    for _ in range(T):
        r = int(rng.integers(1, d))
        rows = r + int(rng.integers(0, 2))
        x = rng.standard_normal((rows, r)) @ rng.standard_normal((r, d))
        mats.append(x / np.linalg.norm(x, 2) * rng.uniform(0.3, 1.0))
    return collection_from_solution(mats, _random_w(rng, d))


CONSTRUCTIONS = {
    "planar": lambda solution_angles, dimension=2, solution_norm=1.0, shared="data": (
        planar_collection(PlanarSpec(tuple(solution_angles), dimension, solution_norm, shared)), None),
    "two_task": lambda theta, dimension=2: (two_task_collection(theta, dimension), Ordering.cyclic(2)),
    "adversarial_identity": lambda epsilon: adversarial_identity(epsilon),
    "back_and_forth": lambda T, k, dimension=2: back_and_forth(T, k, dimension),
    "fig5": lambda T=128: (fig5_collection(T), Ordering.cyclic(T)),
}


def build(name, **params):
    """Named construction -> (collection, default ordering or None)."""
    if name not in CONSTRUCTIONS:
        raise InvalidInputError(f"unknown construction {name!r}; known: {sorted(CONSTRUCTIONS)}")
    try:
        return CONSTRUCTIONS[name](**params)
    except TypeError as exc:
        raise InvalidInputError(f"bad parameters for {name}: {exc}") from exc
