"""Closed-form forgetting and convergence bounds."""

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError


@dataclass(frozen=True)
class BoundCurve:
    label: str
    points: tuple

    def __post_init__(self):
        ks = [k for k, _ in self.points]
        if any(b <= a for a, b in zip(ks, ks[1:])):
            raise InvalidInputError("bound curve iterations must be strictly increasing")
        if any(not math.isfinite(v) or v < 0 for _, v in self.points):
            raise InvalidInputError("bound curve values must be finite and non-negative")

    @classmethod
    def evaluate(cls, label, fn, ks):
        return cls(label, tuple((int(k), float(fn(k))) for k in ks))


def _even(k):
    if k < 2 or k % 2:
        raise InvalidInputError(f"k must be a positive even number, got {k}")


def two_task_forgetting_bound(k, angles):
    """Largest ``(cos²θ)^(k-1) sin²θ / 2`` over the non-zero principal angles."""
    _even(k)
    angles = np.atleast_1d(np.asarray(angles, dtype=float))
    if angles.size == 0:
        raise InvalidInputError("need at least one angle")
    if np.any(angles <= 0) or np.any(angles > math.pi / 2 + 1e-12):
        raise InvalidInputError("angles must lie in (0, pi/2]")
    c2 = np.cos(angles) ** 2
    return float(0.5 * np.max(c2 ** (k - 1) * (1 - c2)))


def two_task_worst_case(k):
    """Worst-case two-task cyclic forgetting and the angle attaining it (sin²θ = 1/k)."""
    _even(k)
    value = 0.5 * (1 - 1 / k) ** (k - 1) / k
    return value, math.asin(math.sqrt(1 / k))


def two_task_asymptotic(k):
    return 1 / (2 * math.e * (k - 1)) - 1 / (4 * math.e * (k - 1) ** 2)


def cyclic_lower(T, k):
    return T**2 / (24 * math.e * k)


def cyclic_upper(T, k, d, r_max):
    return min(T**2 / math.sqrt(k), T**2 * (d - r_max) / (2 * k))


def cyclic_bounds(T, k, d, r_max):
    """(lower, upper) worst-case cyclic forgetting for ``T >= 3`` after ``k = nT >= T²`` steps."""
    if T < 3:
        raise InvalidInputError("cyclic bounds need T >= 3")
    if k % T or k < T * T:
        raise InvalidInputError(f"need k a multiple of T with k >= T^2 (T={T}, k={k})")
    if not 0 <= r_max < d:
        raise InvalidInputError(f"need 0 <= r_max < d (r_max={r_max}, d={d})")
    return cyclic_lower(T, k), cyclic_upper(T, k, d, r_max)


def random_expected_bound(k, d, r_avg):
    if k < 1:
        raise InvalidInputError("k must be >= 1")
    if not 0 <= r_avg < d:
        raise InvalidInputError(f"need 0 <= r_avg < d (r_avg={r_avg}, d={d})")
    return 9 * (d - r_avg) / k


def distance_bound(k, friedrichs, w_star_norm):
    """``(cos²θ_F)^(k-1) ||w*||²`` bounding ``||w_k - w*||²`` for two cyclic tasks."""
    _even(k)
    if friedrichs is None or not 0 < friedrichs <= math.pi / 2 + 1e-12:
        raise InvalidInputError("Friedrichs angle must lie in (0, pi/2]")
    return float((math.cos(friedrichs) ** 2) ** (k - 1) * w_star_norm**2)


def average_iterate_bounds(T, k, ordering_kind):
    """Forgetting bound at the averaged iterate.

    ``cyclic``: ``(T-1)/(2n)`` for the end-of-cycle average after ``k = nT``.
    ``random``: ``1/k``, which bounds the residual-based surrogate averaged over
    tasks rather than the per-visit forgetting itself.
    """
    if k < 1:
        raise InvalidInputError("k must be >= 1")
    if ordering_kind == "cyclic":
        if T < 1 or k % T:
            raise InvalidInputError(f"need k a multiple of T (T={T}, k={k})")
        return (T - 1) / (2 * (k // T))
    if ordering_kind == "random":
        return 1 / k
    raise InvalidInputError(f"unknown ordering kind {ordering_kind!r}")
