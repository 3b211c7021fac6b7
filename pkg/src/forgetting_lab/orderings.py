"""Task orderings: identity, cyclic, uniform random and explicit.

Task indices are 1-based at this boundary.

Random orderings follow a fixed generator contract so sequences can be
reproduced by any implementation:

* bit generator: Philox-4x64-10 (Random123), key = (seed, stream) as two
  unsigned 64-bit words, counter starting at zero;
* each draw consumes one raw 64-bit output ``x``;
* the task index is ``floor(x * T / 2**64) + 1`` (multiply-shift, no rejection).

``stream`` is the Monte Carlo trial index; a single ordering uses stream 0.
"""

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError

KINDS = ("identity", "cyclic", "random", "explicit")
_MASK64 = (1 << 64) - 1
_LOW32 = np.uint64(0xFFFFFFFF)
_SHIFT32 = np.uint64(32)


def philox_raw(seed, stream, count):
    """First ``count`` raw 64-bit outputs of Philox-4x64-10 keyed by (seed, stream)."""
    # numpy increments the counter before each block, so start one below zero
    # to make the first block use counter 0 as in the Random123 test vectors.
    bitgen = np.random.Philox(
        counter=np.full(4, _MASK64, dtype=np.uint64),
        key=np.array([seed & _MASK64, stream & _MASK64], dtype=np.uint64),
    )
    return bitgen.random_raw(count).astype(np.uint64)


def scale_to_tasks(raw, task_count):
    """Map raw 64-bit words to 0-based indices in [0, T) via ``floor(x*T / 2**64)``."""
    if not 1 <= task_count < (1 << 32):
        raise InvalidInputError(f"task count {task_count} out of range")
    t = np.uint64(task_count)
    hi = raw >> _SHIFT32
    lo = raw & _LOW32
    return ((hi * t + ((lo * t) >> _SHIFT32)) >> _SHIFT32).astype(np.int64)


def random_indices(seed, stream, task_count, k):
    """0-based uniform task indices for one random stream."""
    return scale_to_tasks(philox_raw(seed, stream, k), task_count)


@dataclass(frozen=True)
class Ordering:
    kind: str
    task_count: int
    seed: int | None = None
    sequence: tuple | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidInputError(f"unknown ordering kind {self.kind!r}")
        if self.task_count < 1:
            raise InvalidInputError("task_count must be positive")
        if self.kind == "random" and self.seed is None:
            raise InvalidInputError("a random ordering needs a seed")
        if self.kind == "explicit":
            if not self.sequence:
                raise InvalidInputError("an explicit ordering needs a non-empty sequence")
            seq = tuple(int(i) for i in self.sequence)
            if any(not 1 <= i <= self.task_count for i in seq):
                raise InvalidInputError(f"explicit sequence entries must lie in [1, {self.task_count}]")
            object.__setattr__(self, "sequence", seq)

    @classmethod
    def identity(cls, task_count):
        return cls("identity", task_count)

    @classmethod
    def cyclic(cls, task_count):
        return cls("cyclic", task_count)

    @classmethod
    def random(cls, task_count, seed):
        return cls("random", task_count, seed=int(seed))

    @classmethod
    def explicit(cls, task_count, sequence):
        return cls("explicit", task_count, sequence=tuple(sequence))

    def with_seed(self, seed):
        return Ordering(self.kind, self.task_count, seed, self.sequence)


def realize(o, k, stream=0):
    """The first ``k`` task indices (1-based) of ordering ``o`` as an int array."""
    if k < 0:
        raise InvalidInputError("k must be non-negative")
    T = o.task_count
    if o.kind == "identity":
        if k > T:
            raise InvalidInputError(f"identity ordering visits each of {T} tasks once; k={k} is too long")
        return np.arange(1, k + 1)
    if o.kind == "cyclic":
        return np.arange(k) % T + 1
    if o.kind == "explicit":
        if k > len(o.sequence):
            raise InvalidInputError(f"explicit sequence has {len(o.sequence)} entries; k={k} requested")
        return np.array(o.sequence[:k], dtype=np.int64)
    return random_indices(o.seed, stream, T, k) + 1
