import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from forgetting_lab.errors import InvalidInputError
from forgetting_lab.orderings import Ordering, philox_raw, random_indices, realize, scale_to_tasks

# Random123 known-answer vector for Philox-4x64-10 with zero key and zero counter.
RANDOM123_ZERO = [0x16554D9ECA36314C, 0xDB20FE9D672D0FDC, 0xD7E772CEE186176B, 0x7E68B68AEC7BA23B]


def test_cyclic_example():
    assert realize(Ordering.cyclic(3), 7).tolist() == [1, 2, 3, 1, 2, 3, 1]


def test_identity_example():
    assert realize(Ordering.identity(4), 4).tolist() == [1, 2, 3, 4]
    with pytest.raises(InvalidInputError):
        realize(Ordering.identity(4), 5)


def test_explicit():
    o = Ordering.explicit(3, [3, 1, 1, 2])
    assert realize(o, 3).tolist() == [3, 1, 1]
    with pytest.raises(InvalidInputError):
        realize(o, 5)
    with pytest.raises(InvalidInputError):
        Ordering.explicit(3, [4])


def test_random_needs_seed_and_known_kind():
    with pytest.raises(InvalidInputError):
        Ordering("random", 3)
    with pytest.raises(InvalidInputError):
        Ordering("shuffled", 3)


def test_random_frequency_two_tasks():
    seq = realize(Ordering.random(2, seed=123), 100_000)
    assert 0.49 <= np.mean(seq == 1) <= 0.51


def test_philox_matches_random123_vector():
    assert [int(x) for x in philox_raw(0, 0, 4)] == RANDOM123_ZERO


def test_pinned_task_sequence():
    # Frozen output of the generator contract; any change here breaks reproducibility.
    assert realize(Ordering.random(5, seed=7), 12).tolist() == [5, 4, 5, 1, 5, 2, 3, 3, 1, 4, 2, 4]
    assert [int(x) for x in philox_raw(42, 3, 3)] == [
        11176599231627061129, 8222962905470028399, 1353911881104120868]


@given(st.integers(0, 2**64 - 1), st.integers(1, 2**32 - 1))
def test_scale_matches_exact_integer_formula(x, T):
    got = int(scale_to_tasks(np.array([x], dtype=np.uint64), T)[0])
    assert got == (x * T) >> 64


def test_streams_differ_and_are_reproducible():
    a = random_indices(9, 0, 10, 50)
    np.testing.assert_array_equal(a, random_indices(9, 0, 10, 50))
    assert not np.array_equal(a, random_indices(9, 1, 10, 50))
    # a shorter draw is a prefix of a longer one
    np.testing.assert_array_equal(random_indices(9, 0, 10, 20), a[:20])


@given(st.integers(1, 12), st.integers(0, 20))
def test_cyclic_visits_each_task_n_times(T, n):
    seq = realize(Ordering.cyclic(T), n * T)
    assert np.bincount(seq, minlength=T + 1)[1:].tolist() == [n] * T


def test_with_seed():
    o = Ordering.random(4, seed=1).with_seed(2)
    assert o.seed == 2 and o.kind == "random"
