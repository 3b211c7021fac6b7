import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from forgetting_lab import constructions
from forgetting_lab.errors import InvalidInputError
from forgetting_lab.learner import (
    TaskStack,
    average_iterates,
    fit_step,
    run,
    run_batch,
    run_projected,
    run_sequence,
)
from forgetting_lab.metrics import forgetting
from forgetting_lab.orderings import Ordering, realize
from forgetting_lab.tasks import Task, TaskCollection, min_norm_solution

R2 = 1 / math.sqrt(2)


def test_fit_step_examples():
    np.testing.assert_allclose(fit_step([0.0, 0.0], Task([[1.0, 0.0]], [0.5])), [0.5, 0.0])
    np.testing.assert_allclose(fit_step([1.0, 0.0], Task([[R2, R2]], [0.0])), [0.5, -0.5], atol=1e-15)
    t = Task([[R2, R2]], [0.3])
    w = np.array([0.3 / R2, 0.0])
    np.testing.assert_allclose(fit_step(w, t), w, atol=1e-10)
    with pytest.raises(InvalidInputError):
        fit_step([0.0, 0.0, 0.0], t)


@given(st.integers(0, 2**32 - 1), st.integers(1, 6))
def test_rank_one_step_is_kaczmarz(seed, d):
    rng = np.random.default_rng(seed)
    x = rng.uniform(-1, 1, d)
    x /= max(1.0, np.linalg.norm(x))
    y = float(rng.uniform(-1, 1))
    w = rng.normal(size=d)
    expected = w + (y - x @ w) * x / (x @ x)
    np.testing.assert_allclose(fit_step(w, Task([x], [y])), expected, atol=1e-10)


def test_orthogonal_tasks_reach_solution_in_one_pass():
    s = TaskCollection([([[1.0, 0.0]], [0.3]), ([[0.0, 1.0]], [0.4])])
    tr = run(s, Ordering.cyclic(2), 2)
    np.testing.assert_allclose(tr.final, [0.3, 0.4], atol=1e-10)


def test_k_zero_keeps_zero_iterate():
    s = TaskCollection([([[1.0, 0.0]], [0.3])])
    tr = run(s, Ordering.cyclic(1), 0)
    assert tr.k == 0 and tr.iterates.shape == (1, 2)
    np.testing.assert_array_equal(tr.final, [0.0, 0.0])


def test_two_task_distance_saturates():
    s = constructions.two_task_collection(math.pi / 4)
    tr = run(s, Ordering.cyclic(2), 6)
    dist = np.sum((tr.final - min_norm_solution(s)) ** 2)
    assert dist == pytest.approx(0.5**5, abs=1e-8)


def test_run_projected_examples():
    w = np.array([0.6, 0.8])
    np.testing.assert_array_equal(run_projected(w, [], []), np.zeros(2))
    p = np.eye(2) - np.outer(w, w)
    np.testing.assert_allclose(run_projected(w, [p], [1]), w, atol=1e-15)


def test_run_projected_matches_run_on_random_collection():
    s = constructions.random_collection(np.random.default_rng(4), 4, 3)
    tr = run(s, Ordering.cyclic(3), 9)
    w = run_projected(min_norm_solution(s), s.projections, tr.sequence)
    np.testing.assert_allclose(w, tr.final, atol=1e-7)


@given(st.integers(0, 2**32 - 1), st.integers(2, 6), st.integers(1, 4), st.integers(0, 40))
def test_update_rule_equals_projection_product(seed, d, T, k):
    rng = np.random.default_rng(seed)
    s = constructions.random_collection(rng, d, T)
    seq = rng.integers(1, T + 1, size=k)
    tr = run_sequence(s, seq)
    np.testing.assert_allclose(run_projected(min_norm_solution(s), s.projections, seq), tr.final, atol=1e-7)


@given(st.integers(0, 2**32 - 1), st.integers(2, 6), st.integers(1, 4))
def test_contraction_and_interpolation(seed, d, T):
    rng = np.random.default_rng(seed)
    s = constructions.random_collection(rng, d, T)
    seq = rng.integers(1, T + 1, size=25)
    tr = run_sequence(s, seq)
    dist = np.linalg.norm(tr.iterates - min_norm_solution(s), axis=1)
    assert np.all(dist[1:] <= dist[:-1] + 1e-10)
    for t, m in enumerate(seq, start=1):
        r = s[int(m)].data @ tr.iterates[t] - s[int(m)].labels
        assert r @ r <= 1e-16


def test_average_iterates_examples():
    s = TaskCollection([([[1.0, 0.0]], [0.3])])
    tr = run(s, Ordering.cyclic(1), 3)
    np.testing.assert_allclose(average_iterates(tr), [0.3, 0.0])
    tr.iterates = np.array([[0, 0], [1, 0], [0, 1]], dtype=float)
    tr.sequence = np.array([1, 1])
    np.testing.assert_allclose(average_iterates(tr), [0.5, 0.5])


def test_average_iterates_without_stored_iterates():
    s, o = constructions.back_and_forth(4, 32)
    full = run(s, o, 32)
    lean = run(s, o, 32, store_iterates=False, cycle_length=4)
    np.testing.assert_allclose(average_iterates(lean), average_iterates(full), atol=1e-14)
    np.testing.assert_allclose(average_iterates(lean, "end_of_cycle"),
                               average_iterates(full, "end_of_cycle", 4), atol=1e-14)
    with pytest.raises(InvalidInputError):
        average_iterates(full, "end_of_cycle", 5)
    with pytest.raises(InvalidInputError):
        average_iterates(full, "median")


def test_back_and_forth_end_of_cycle_average_bound():
    T, n = 4, 8
    s, o = constructions.back_and_forth(T, n * T)
    tr = run(s, o, n * T)
    avg = average_iterates(tr, "end_of_cycle", T)
    tr.final = avg
    assert forgetting(tr).forgetting <= (T - 1) / (2 * n)


def test_run_batch_matches_sequential_runs():
    rng = np.random.default_rng(8)
    cols = [constructions.random_collection(rng, 5, 3) for _ in range(4)]
    seqs = rng.integers(0, 3, size=(4, 30))
    seen = {}
    run_batch(TaskStack.from_collections(cols), seqs, record_at=[10, 30],
              on_record=lambda k, W: seen.__setitem__(k, W.copy()))
    for b, s in enumerate(cols):
        for k in (10, 30):
            np.testing.assert_allclose(seen[k][b], run_sequence(s, seqs[b, :k] + 1).final, atol=1e-12)


def test_run_batch_shared_stack():
    s = constructions.random_collection(np.random.default_rng(9), 4, 3)
    seqs = np.stack([realize(Ordering.random(3, seed=1), 20, stream=i) - 1 for i in range(5)])
    out = {}
    run_batch(TaskStack.from_collections([s]), seqs, record_at=[20],
              on_record=lambda k, W: out.__setitem__(k, W.copy()))
    for b in range(5):
        np.testing.assert_allclose(out[20][b], run_sequence(s, seqs[b] + 1).final, atol=1e-12)
