"""Small dense linear algebra: SVD, pseudo-inverses, null-space projections
and principal angles between subspaces."""

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError

RANK_TOLERANCE = 1e-10
ANGLE_ZERO_TOLERANCE = 1e-9


def as_matrix(m, name="matrix"):
    a = np.asarray(m, dtype=float)
    if a.ndim == 1:
        a = a[np.newaxis, :]
    if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
        raise InvalidInputError(f"{name} must be a non-empty 2-d array, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InvalidInputError(f"{name} has non-finite entries")
    return a


def as_vector(v, name="vector"):
    a = np.asarray(v, dtype=float).reshape(-1)
    if a.size < 1:
        raise InvalidInputError(f"{name} must have at least one entry")
    if not np.all(np.isfinite(a)):
        raise InvalidInputError(f"{name} has non-finite entries")
    return a


@dataclass(frozen=True)
class SvdResult:
    """Thin left basis, singular values and a *full* right basis.

    ``right_basis[:, :numerical_rank]`` spans the row space and the remaining
    columns span the null space.
    """

    left_basis: np.ndarray
    singular_values: np.ndarray
    right_basis: np.ndarray
    numerical_rank: int

    def reconstruct(self):
        p = self.singular_values.size
        return (self.left_basis * self.singular_values) @ self.right_basis[:, :p].T

    @property
    def row_space(self):
        return self.right_basis[:, : self.numerical_rank]

    @property
    def null_space(self):
        return self.right_basis[:, self.numerical_rank :]


def numerical_rank(singular_values, tol=RANK_TOLERANCE):
    s = np.asarray(singular_values)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.count_nonzero(s > tol * s[0]))


def svd(m):
    a = as_matrix(m)
    u, s, vt = np.linalg.svd(a, full_matrices=True)
    p = s.size
    return SvdResult(u[:, :p], s, vt.T, numerical_rank(s))


def pseudo_inverse(m):
    """Moore-Penrose inverse, truncating singular values below the relative rank tolerance."""
    res = svd(m)
    r = res.numerical_rank
    u = res.left_basis[:, :r]
    v = res.right_basis[:, :r]
    return (v / res.singular_values[:r]) @ u.T


def null_projection(m):
    """Orthogonal projection onto the null space of ``m`` (a ``d x d`` matrix)."""
    ns = svd(m).null_space
    return ns @ ns.T


def orthonormal_basis(m):
    """Orthonormal basis for the column space of ``m``."""
    a = as_matrix(m)
    u, s, _ = np.linalg.svd(a, full_matrices=False)
    return u[:, : numerical_rank(s)]


def principal_angles(a, b):
    """Principal angles between the column spaces of ``a`` and ``b``, ascending, in radians.

    Angles with cos² >= 1/2 come from the sines (singular values of the part of
    one basis orthogonal to the other) because arccos loses about eight digits
    near zero; the rest come from the clamped cosines.
    """
    a = as_matrix(a, "a")
    b = as_matrix(b, "b")
    if a.shape[0] != b.shape[0]:
        raise InvalidInputError(f"row counts differ: {a.shape[0]} vs {b.shape[0]}")
    qa = orthonormal_basis(a)
    qb = orthonormal_basis(b)
    if qa.shape[1] == 0 or qb.shape[1] == 0:
        raise InvalidInputError("principal angles are undefined for a zero subspace")
    if qa.shape[1] < qb.shape[1]:
        qa, qb = qb, qa
    cross = qa.T @ qb
    cosines = np.clip(np.linalg.svd(cross, compute_uv=False), 0.0, 1.0)
    sines = np.clip(np.linalg.svd(qb - qa @ cross, compute_uv=False), 0.0, 1.0)
    from_cos = np.arccos(cosines)
    from_sin = np.arcsin(np.sort(sines)[: cosines.size])
    return np.where(cosines**2 >= 0.5, from_sin, from_cos)


def friedrichs_angle(angles, tol=ANGLE_ZERO_TOLERANCE):
    """Smallest angle strictly above ``tol``, or ``None`` if every angle is zero."""
    nonzero = [float(x) for x in np.asarray(angles, dtype=float).reshape(-1) if x > tol]
    return min(nonzero) if nonzero else None


def task_angles(x1, x2):
    """Principal angles between the row spaces of two data matrices."""
    return principal_angles(as_matrix(x1).T, as_matrix(x2).T)
