"""Sequential fitting of task sequences.

``fit_step`` applies ``w <- w + X⁺(y - X w)``: the point of the task's
solution space closest to ``w``. ``run_projected`` is the equivalent product
of null-space projections applied to ``-w*`` and serves as an independent
check on ``run``. ``run_batch`` vectorizes the same update rule over many
sequences or many collections at once.
"""

from dataclasses import dataclass

import numpy as np

from . import linalg
from .errors import InvalidInputError
from .orderings import realize

FIT_TOLERANCE = 1e-8
ORACLE_TOLERANCE = 1e-7


def fit_step(w, task):
    w = np.asarray(w, dtype=float)
    if w.shape != (task.dimension,):
        raise InvalidInputError(f"iterate has shape {w.shape}, task dimension is {task.dimension}")
    return w + task.pinv @ (task.labels - task.data @ w)


@dataclass
class Trajectory:
    """Result of fitting ``sequence`` starting from the zero vector.

    ``iterates`` holds w_0..w_k as a ``(k+1, d)`` array unless the run was made
    with ``store_iterates=False``; the sums below are always accumulated so the
    average iterates stay available either way.
    """

    final: np.ndarray
    sequence: np.ndarray
    collection: object
    iterates: np.ndarray | None = None
    iterate_sum: np.ndarray | None = None
    cycle_length: int | None = None
    cycle_end_sum: np.ndarray | None = None

    @property
    def k(self):
        return len(self.sequence)


def run(s, o, k, store_iterates=True, cycle_length=None):
    """Fit ``k`` tasks of collection ``s`` in the order given by ``o``."""
    if k < 0:
        raise InvalidInputError("k must be non-negative")
    seq = realize(o, k) if k > 0 else np.zeros(0, dtype=np.int64)
    return run_sequence(s, seq, store_iterates=store_iterates, cycle_length=cycle_length)


def run_sequence(s, sequence, store_iterates=True, cycle_length=None):
    seq = np.asarray(sequence, dtype=np.int64)
    d = s.dimension
    w = np.zeros(d)
    iterates = np.empty((len(seq) + 1, d)) if store_iterates else None
    if store_iterates:
        iterates[0] = w
    total = np.zeros(d)
    cycle_sum = np.zeros(d) if cycle_length else None
    for t, m in enumerate(seq, start=1):
        w = fit_step(w, s[int(m)])
        total += w
        if cycle_length and t % cycle_length == 0:
            cycle_sum += w
        if store_iterates:
            iterates[t] = w
    return Trajectory(w, seq, s, iterates, total, cycle_length, cycle_sum)


def run_projected(w_star, projections, sequence):
    """``w* + P_{τ(k)}···P_{τ(1)}(-w*)`` with 1-based ``sequence`` indices into ``projections``."""
    w_star = linalg.as_vector(w_star, "w_star")
    e = -w_star
    for m in sequence:
        p = projections[int(m) - 1]
        if p.shape != (w_star.size, w_star.size):
            raise InvalidInputError(f"projection has shape {p.shape}, expected {(w_star.size,) * 2}")
        e = p @ e
    return w_star + e


def average_iterates(tr, mode="full", cycle_length=None):
    """Mean of w_1..w_k (``full``) or of w_T, w_2T, ..., w_nT (``end_of_cycle``)."""
    k = tr.k
    if mode == "full":
        if k < 1:
            raise InvalidInputError("the full average needs k >= 1")
        if tr.iterates is not None:
            return tr.iterates[1:].mean(axis=0)
        return tr.iterate_sum / k
    if mode != "end_of_cycle":
        raise InvalidInputError(f"unknown averaging mode {mode!r}")
    T = cycle_length or tr.cycle_length
    if not T or k < T or k % T:
        raise InvalidInputError(f"end-of-cycle average needs k a positive multiple of T (k={k}, T={T})")
    if tr.iterates is not None:
        return tr.iterates[T::T].mean(axis=0)
    if tr.cycle_length != T:
        raise InvalidInputError("trajectory did not accumulate end-of-cycle sums for this T")
    return tr.cycle_end_sum / (k // T)


@dataclass(frozen=True)
class TaskStack:
    """Tasks of one or more collections padded to a common row count.

    Arrays have a leading batch axis ``B`` (1 for a single collection):
    ``data (B, T, n, d)``, ``pinv (B, T, d, n)``, ``labels (B, T, n)``.
    Zero padding rows leave both the update and the losses unchanged.
    """

    data: np.ndarray
    pinv: np.ndarray
    labels: np.ndarray
    w_star: np.ndarray
    projections: np.ndarray

    @classmethod
    def from_collections(cls, collections):
        n = max(t.rows for s in collections for t in s.tasks)
        T = len(collections[0])
        d = collections[0].dimension
        B = len(collections)
        data = np.zeros((B, T, n, d))
        pinv = np.zeros((B, T, d, n))
        labels = np.zeros((B, T, n))
        proj = np.zeros((B, T, d, d))
        w_star = np.zeros((B, d))
        for b, s in enumerate(collections):
            if len(s) != T or s.dimension != d:
                raise InvalidInputError("stacked collections must share T and d")
            for m, t in enumerate(s.tasks):
                data[b, m, : t.rows] = t.data
                pinv[b, m, :, : t.rows] = t.pinv
                labels[b, m, : t.rows] = t.labels
                proj[b, m] = t.projection
            w_star[b] = s.offline_solution if s.offline_solution is not None else s._w
        return cls(data, pinv, labels, w_star, proj)

    @property
    def batch(self):
        return self.data.shape[0]


def run_batch(stack, sequences, record_at=(), on_record=None):
    """Run many sequences at once; ``sequences`` is ``(B, k)`` of 0-based indices.

    When ``stack.batch == 1`` the single collection is shared by every row.
    ``on_record(k, W)`` is called with the ``(B, d)`` iterates after each step
    listed in ``record_at``. Returns the final iterates.
    """
    seqs = np.asarray(sequences, dtype=np.int64)
    if seqs.ndim != 2:
        raise InvalidInputError("sequences must be a (B, k) array")
    B, k = seqs.shape
    shared = stack.batch == 1
    if not shared and stack.batch != B:
        raise InvalidInputError(f"{stack.batch} collections for {B} sequences")
    rows = np.zeros(B, dtype=np.int64) if shared else np.arange(B)
    record = set(int(r) for r in record_at)
    W = np.zeros((B, stack.data.shape[-1]))
    for t in range(k):
        idx = seqs[:, t]
        x = stack.data[rows, idx]
        resid = stack.labels[rows, idx] - np.einsum("bnd,bd->bn", x, W)
        W = W + np.einsum("bdn,bn->bd", stack.pinv[rows, idx], resid)
        if on_record is not None and t + 1 in record:
            on_record(t + 1, W)
    return W
