"""Forgetting, its projection-residual upper bound, and expected forgetting under random orderings."""

import itertools
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError
from .learner import TaskStack, run_batch, run_sequence
from .orderings import random_indices
from .tasks import min_norm_solution


@dataclass(frozen=True)
class ForgettingRecord:
    iteration: int
    forgetting: float
    residual_bound: float
    distance_sq: float
    per_task_losses: np.ndarray


@dataclass(frozen=True)
class ExpectedForgettingEstimate:
    mean: float
    std_dev: float
    trials: int
    seed_base: int
    values: np.ndarray | None = None

    @property
    def standard_error(self):
        return self.std_dev / np.sqrt(self.trials)


def task_loss(w, task):
    w = np.asarray(w, dtype=float)
    if w.shape != (task.dimension,):
        raise InvalidInputError(f"iterate has shape {w.shape}, task dimension is {task.dimension}")
    r = task.data @ w - task.labels
    return float(r @ r)


def _record(w, sequence, s):
    seq = np.asarray(sequence, dtype=np.int64)
    if seq.size == 0:
        raise InvalidInputError("forgetting is undefined before the first task (k = 0)")
    w_star = min_norm_solution(s)
    e = w - w_star
    unique = np.unique(seq)
    losses = {int(m): task_loss(w, s[int(m)]) for m in unique}
    residuals = {}
    for m in unique:
        r = e - s[int(m)].projection @ e
        residuals[int(m)] = float(r @ r)
    per_task = np.array([losses[int(m)] for m in seq])
    return ForgettingRecord(
        iteration=seq.size,
        forgetting=float(per_task.mean()),
        residual_bound=float(np.mean([residuals[int(m)] for m in seq])),
        distance_sq=float(e @ e),
        per_task_losses=per_task,
    )


def forgetting(tr):
    """Average loss of the final iterate over every task visit t = 1..k."""
    return _record(tr.final, tr.sequence, tr.collection)


def forgetting_at(w, sequence, s):
    """Same quantity as ``forgetting`` evaluated at an arbitrary parameter vector."""
    return _record(np.asarray(w, dtype=float), sequence, s).forgetting


def forgetting_curve(s, sequence, record_at):
    """ForgettingRecords at each iteration in ``record_at`` of one deterministic run.

    Streams the run without storing iterates, so horizons in the 10^5 range are cheap.
    """
    seq = np.asarray(sequence, dtype=np.int64)
    wanted = sorted(set(int(k) for k in record_at))
    if wanted and (wanted[0] < 1 or wanted[-1] > seq.size):
        raise InvalidInputError("record iterations must lie in [1, k]")
    out = []
    stack = TaskStack.from_collections([s])

    def on_record(k, W):
        out.append(_record(W[0].copy(), seq[:k], s))

    run_batch(stack, seq[np.newaxis, :] - 1, record_at=wanted, on_record=on_record)
    return out


def batch_metrics(stack, W, counts, k):
    """Per-row forgetting, residual bound and squared distance.

    ``counts[b, m]`` is how often task ``m`` was visited in the first ``k`` steps
    of row ``b``. The stack is either shared (batch 1) or one collection per row.
    """
    col = W[:, np.newaxis, :, np.newaxis]
    resid = (stack.data @ col)[..., 0] - stack.labels
    losses = np.einsum("bmn,bmn->bm", resid, resid)
    e = W - stack.w_star
    r = e[:, np.newaxis, :] - (stack.projections @ e[:, np.newaxis, :, np.newaxis])[..., 0]
    res = np.einsum("bmi,bmi->bm", r, r)
    return (counts * losses).sum(axis=1) / k, (counts * res).sum(axis=1) / k, np.einsum("bi,bi->b", e, e)


def default_workers():
    env = os.environ.get("FORGETTING_LAB_THREADS")
    if env:
        return max(1, int(env))
    return min(4, os.cpu_count() or 1)


def random_trial_curves(s, record_at, trials, seed_base, workers=None, chunk=4096):
    """Simulate ``trials`` uniform random orderings and record metrics.

    Trial ``i`` draws its sequence from generator stream ``i`` keyed by ``seed_base``;
    the sequence up to a recorded ``k`` is the prefix of the longest one, exactly
    as an independent run of length ``k`` would draw it.

    Returns a dict of ``(trials, len(record_at))`` arrays: ``forgetting``,
    ``residual_bound``, ``distance_sq``.
    """
    if trials < 1:
        raise InvalidInputError("trials must be >= 1")
    ks = sorted(set(int(k) for k in record_at))
    if not ks or ks[0] < 1:
        raise InvalidInputError("record iterations must be positive")
    min_norm_solution(s)
    T = len(s)
    kmax = ks[-1]
    stack = TaskStack.from_collections([s])

    def work(lo, hi):
        seqs = np.stack([random_indices(seed_base, i, T, kmax) for i in range(lo, hi)])
        B = hi - lo
        counts = np.zeros((B, T))
        out = {name: np.zeros((B, len(ks))) for name in ("forgetting", "residual_bound", "distance_sq")}
        state = {"k": 0, "col": 0}

        def on_record(k, W):
            block = seqs[:, state["k"] : k]
            flat = (np.arange(B)[:, None] * T + block).ravel()
            counts[:] += np.bincount(flat, minlength=B * T).reshape(B, T)
            state["k"] = k
            f, rb, dist = batch_metrics(stack, W, counts, k)
            c = state["col"]
            out["forgetting"][:, c] = f
            out["residual_bound"][:, c] = rb
            out["distance_sq"][:, c] = dist
            state["col"] += 1

        run_batch(stack, seqs, record_at=ks, on_record=on_record)
        return out

    bounds = [(lo, min(lo + chunk, trials)) for lo in range(0, trials, chunk)]
    workers = workers or default_workers()
    if workers > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda b: work(*b), bounds))
    else:
        parts = [work(*b) for b in bounds]
    return {name: np.concatenate([p[name] for p in parts], axis=0) for name in parts[0]}


def summarize(values, seed_base):
    values = np.asarray(values, dtype=float)
    std = float(values.std(ddof=1)) if values.size > 1 else 0.0
    return ExpectedForgettingEstimate(float(values.mean()), std, values.size, seed_base, values)


def expected_forgetting(s, k, trials, seed_base, workers=None):
    """Monte Carlo estimate of the expected forgetting after ``k`` uniformly random tasks."""
    curves = random_trial_curves(s, [k], trials, seed_base, workers=workers)
    return summarize(curves["forgetting"][:, 0], seed_base)


def exact_expected_forgetting(s, k, max_sequences=1 << 20):
    """Expected forgetting by enumerating all T^k equally likely sequences.

    A brute-force reference for small cases, computed one sequence at a time
    through ``run_sequence`` rather than the batched Monte Carlo path.
    """
    T = len(s)
    if T**k > max_sequences:
        raise InvalidInputError(f"T^k = {T**k} sequences exceeds the enumeration limit")
    total = 0.0
    for seq in itertools.product(range(1, T + 1), repeat=k):
        tr = run_sequence(s, seq, store_iterates=False)
        total += forgetting(tr).forgetting
    return total / T**k
