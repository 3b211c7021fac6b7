import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from forgetting_lab import linalg
from forgetting_lab.errors import InvalidInputError

from conftest import matrices


def test_svd_diag_with_zero():
    res = linalg.svd(np.diag([2.0, 0.0]))
    np.testing.assert_allclose(res.singular_values, [2, 0])
    assert res.numerical_rank == 1


def test_svd_identity():
    res = linalg.svd(np.eye(3))
    np.testing.assert_allclose(res.singular_values, [1, 1, 1])
    assert res.numerical_rank == 3


def test_svd_rank_from_factors():
    rng = np.random.default_rng(0)
    m = rng.normal(size=(4, 2)) @ rng.normal(size=(2, 6))
    res = linalg.svd(m)
    assert res.numerical_rank == 2
    np.testing.assert_allclose(res.reconstruct(), m, atol=1e-10)


@given(matrices())
def test_svd_bases_orthonormal(m):
    res = linalg.svd(m)
    u, v = res.left_basis, res.right_basis
    np.testing.assert_allclose(u.T @ u, np.eye(u.shape[1]), atol=1e-10)
    np.testing.assert_allclose(v.T @ v, np.eye(v.shape[1]), atol=1e-10)
    assert np.all(np.diff(res.singular_values) <= 0)
    np.testing.assert_allclose(res.reconstruct(), m, atol=1e-10)


def test_rejects_non_finite():
    with pytest.raises(InvalidInputError):
        linalg.svd([[1.0, np.nan]])
    with pytest.raises(InvalidInputError):
        linalg.as_vector([])


def test_pinv_diag():
    np.testing.assert_allclose(linalg.pseudo_inverse(np.diag([2.0, 0.0])), np.diag([0.5, 0.0]))


def test_pinv_row_vector():
    np.testing.assert_allclose(linalg.pseudo_inverse([[3.0, 4.0]]), [[3 / 25], [4 / 25]])


@given(matrices())
def test_pinv_penrose_conditions(m):
    p = linalg.pseudo_inverse(m)
    np.testing.assert_allclose(m @ p @ m, m, atol=1e-8)
    np.testing.assert_allclose(p @ m @ p, p, atol=1e-8)
    np.testing.assert_allclose((m @ p).T, m @ p, atol=1e-8)
    np.testing.assert_allclose((p @ m).T, p @ m, atol=1e-8)


def test_pinv_matches_numpy_on_random():
    m = np.random.default_rng(1).normal(size=(3, 5))
    np.testing.assert_allclose(linalg.pseudo_inverse(m), np.linalg.pinv(m), atol=1e-10)


def test_null_projection_examples():
    np.testing.assert_allclose(linalg.null_projection([[1.0, 0.0]]), np.diag([0.0, 1.0]), atol=1e-15)
    np.testing.assert_allclose(linalg.null_projection(np.eye(2)), np.zeros((2, 2)))
    s = 1 / math.sqrt(2)
    np.testing.assert_allclose(linalg.null_projection([[s, s]]), [[0.5, -0.5], [-0.5, 0.5]], atol=1e-12)


@given(matrices(), st.integers(0, 2**32 - 1))
def test_null_projection_properties(m, seed):
    p = linalg.null_projection(m)
    np.testing.assert_allclose(p @ p, p, atol=1e-9)
    np.testing.assert_allclose(p, p.T, atol=1e-12)
    np.testing.assert_allclose(m @ p, 0, atol=1e-9)
    v = np.random.default_rng(seed).normal(size=m.shape[1])
    assert np.linalg.norm(p @ v) <= np.linalg.norm(v) + 1e-12


def test_principal_angles_examples():
    e1, e2 = np.array([[1.0], [0.0]]), np.array([[0.0], [1.0]])
    np.testing.assert_allclose(linalg.principal_angles(e1, e1), [0.0], atol=1e-12)
    np.testing.assert_allclose(linalg.principal_angles(e1, e2), [math.pi / 2])
    a = np.array([[1, 0], [0, 1], [0, 0]], dtype=float)
    b = np.array([[1, 0], [0, 1 / math.sqrt(2)], [0, 1 / math.sqrt(2)]])
    np.testing.assert_allclose(linalg.principal_angles(a, b), [0.0, math.pi / 4], atol=1e-12)


def test_principal_angles_zero_is_below_tolerance():
    rng = np.random.default_rng(5)
    shared = rng.normal(size=(6, 1))
    a = np.hstack([shared, rng.normal(size=(6, 2))])
    b = np.hstack([shared * 3.0, rng.normal(size=(6, 1))])
    angles = linalg.principal_angles(a, b)
    assert angles[0] < linalg.ANGLE_ZERO_TOLERANCE
    assert linalg.friedrichs_angle(angles) == pytest.approx(angles[1])


def _angles_oracle(a, b):
    qa, _ = np.linalg.qr(a)
    qb, _ = np.linalg.qr(b)
    cos = np.linalg.svd(qa.T @ qb, compute_uv=False)
    return np.sort(np.arccos(np.clip(cos, -1, 1)))


@given(st.integers(0, 2**32 - 1), st.integers(2, 7))
def test_principal_angles_against_qr_oracle(seed, d):
    rng = np.random.default_rng(seed)
    p = rng.integers(1, d)
    q = rng.integers(1, d)
    a, b = rng.normal(size=(d, p)), rng.normal(size=(d, q))
    got = linalg.principal_angles(a, b)
    want = _angles_oracle(a, b)
    # arccos is only accurate to ~1e-8 near zero, which is why the library avoids it there
    np.testing.assert_allclose(got, want, atol=1e-6)


@given(st.integers(0, 2**32 - 1), st.integers(2, 7))
def test_principal_angles_symmetric_and_basis_invariant(seed, d):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(d, rng.integers(1, d)))
    b = rng.normal(size=(d, rng.integers(1, d)))
    base = linalg.principal_angles(a, b)
    np.testing.assert_allclose(linalg.principal_angles(b, a), base, atol=1e-8)
    r = rng.normal(size=(a.shape[1], a.shape[1])) + 3 * np.eye(a.shape[1])
    np.testing.assert_allclose(linalg.principal_angles(a @ r, b), base, atol=1e-8)


@given(st.integers(0, 2**32 - 1), st.integers(3, 8))
def test_row_space_and_null_space_share_nonzero_angles(seed, d):
    rng = np.random.default_rng(seed)
    x1 = rng.normal(size=(rng.integers(1, d), d))
    x2 = rng.normal(size=(rng.integers(1, d), d))
    rows = linalg.task_angles(x1, x2)
    nulls = linalg.principal_angles(linalg.svd(x1).null_space, linalg.svd(x2).null_space)
    tol = 1e-7
    np.testing.assert_allclose(np.sort(rows[rows > tol]), np.sort(nulls[nulls > tol]), atol=1e-8)


def test_friedrichs_angle():
    assert linalg.friedrichs_angle([0, math.pi / 6, math.pi / 2]) == pytest.approx(math.pi / 6)
    assert linalg.friedrichs_angle([0, 0]) is None
    assert linalg.friedrichs_angle([math.pi / 4]) == pytest.approx(math.pi / 4)


def test_principal_angles_rejects_mismatched_rows():
    with pytest.raises(InvalidInputError):
        linalg.principal_angles(np.ones((2, 1)), np.ones((3, 1)))
    with pytest.raises(InvalidInputError):
        linalg.principal_angles(np.zeros((2, 1)), np.ones((2, 1)))
