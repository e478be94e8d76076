"""Shared value types, ±1 vector algebra and the seeded random stream.

Sign vectors are plain read-only ``int8`` numpy arrays; the helpers here
validate and freeze them so every other module can rely on entries being
exactly -1 or +1.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

SignVector = np.ndarray


def sign_vector(values: Sequence[int] | np.ndarray) -> SignVector:
    """Validate ``values`` and return them as an immutable int8 array."""
    arr = np.asarray(values)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError(f"sign vector must be 1-D and non-empty, got shape {arr.shape}")
    if not np.all((arr == 1) | (arr == -1)):
        raise ValueError("sign vector entries must be -1 or +1")
    out = arr.astype(np.int8, copy=True)
    out.setflags(write=False)
    return out


def sign_matrix(values) -> np.ndarray:
    arr = np.asarray(values)
    if arr.ndim != 2:
        raise ValueError(f"expected a 2-D array of signs, got shape {arr.shape}")
    if arr.size and not np.all((arr == 1) | (arr == -1)):
        raise ValueError("entries must be -1 or +1")
    out = arr.astype(np.int8, copy=True)
    out.setflags(write=False)
    return out


def _check_same_length(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape[-1] != b.shape[-1]:
        raise ValueError(f"length mismatch: {a.shape[-1]} != {b.shape[-1]}")


def dot(a: SignVector, b: SignVector) -> int:
    """Integer inner product of two equal-length sign vectors."""
    a, b = np.asarray(a), np.asarray(b)
    _check_same_length(a, b)
    return int(np.dot(a.astype(np.int64), b.astype(np.int64)))


def normalized_inner_product(a: SignVector, b: SignVector) -> float:
    """Overlap of the amplitude encodings of ``a`` and ``b``: ``dot(a, b) / N``."""
    return dot(a, b) / len(a)


def is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


class SeededRng:
    """Deterministic random stream backed by numpy's PCG64.

    Equal seeds give equal streams. Array draws consume the stream in C order,
    so ``random((a, b))`` yields the same numbers as ``a * b`` scalar calls.
    """

    def __init__(self, seed: int):
        if not 0 <= int(seed) < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        self.seed = int(seed)
        self._gen = np.random.Generator(np.random.PCG64(self.seed))

    def derive(self, *keys: int) -> "SeededRng":
        """Independent child stream identified by ``keys`` (does not consume draws)."""
        child = SeededRng.__new__(SeededRng)
        child.seed = self.seed
        child._gen = np.random.Generator(
            np.random.PCG64(np.random.SeedSequence([self.seed, *keys]))
        )
        return child

    def random(self, size=None):
        """Uniform reals in [0, 1)."""
        return self._gen.random(size)

    def bernoulli_sign(self, p, size=None):
        """+1 with probability ``p``, else -1; one uniform draw per entry."""
        u = self._gen.random(size if size is not None else np.shape(p) or None)
        return np.where(u < p, 1, -1).astype(np.int8)

    def integers(self, high: int, size=None):
        return self._gen.integers(0, high, size=size)

    def choice(self, n: int, k: int) -> np.ndarray:
        """``k`` distinct indices from ``range(n)``, uniformly without replacement."""
        if not 0 <= k <= n:
            raise ValueError(f"cannot choose {k} of {n} without replacement")
        return self._gen.choice(n, size=k, replace=False)

    def permutation(self, n: int) -> np.ndarray:
        return self._gen.permutation(n)


def sample_sign(p: float, rng: SeededRng) -> int:
    """Return +1 with probability ``p`` and -1 otherwise (one uniform draw)."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"probability out of range: {p}")
    return 1 if rng.random() < p else -1


@dataclass(frozen=True, eq=False)
class ModelWeights:
    """Binary weights: ``quantum`` is (M, N), one row per hidden neuron; ``classical`` is (M,)."""

    quantum: np.ndarray
    classical: np.ndarray

    def __post_init__(self):
        q = sign_matrix(self.quantum)
        c = sign_vector(self.classical)
        if q.shape[0] != c.shape[0]:
            raise ValueError(
                f"classical length {c.shape[0]} does not match {q.shape[0]} hidden neurons"
            )
        object.__setattr__(self, "quantum", q)
        object.__setattr__(self, "classical", c)

    @property
    def M(self) -> int:
        return self.quantum.shape[0]

    @property
    def N(self) -> int:
        return self.quantum.shape[1]

    def __eq__(self, other):
        if not isinstance(other, ModelWeights):
            return NotImplemented
        return np.array_equal(self.quantum, other.quantum) and np.array_equal(
            self.classical, other.classical
        )


@dataclass(frozen=True, eq=False)
class Sample:
    input: SignVector
    label: int

    def __post_init__(self):
        object.__setattr__(self, "input", sign_vector(self.input))
        if self.label not in (-1, 1):
            raise ValueError(f"label must be -1 or +1, got {self.label}")
        object.__setattr__(self, "label", int(self.label))

    def __eq__(self, other):
        if not isinstance(other, Sample):
            return NotImplemented
        return self.label == other.label and np.array_equal(self.input, other.input)


@dataclass(frozen=True, eq=False)
class Dataset:
    """Labelled sign-vector samples stored column-wise as ``X`` (S, N) and ``y`` (S,)."""

    X: np.ndarray
    y: np.ndarray
    N: int = field(default=-1)

    def __post_init__(self):
        X = np.asarray(self.X)
        n = self.N if self.N >= 0 else (X.shape[1] if X.ndim == 2 else -1)
        if X.size == 0:
            X = np.zeros((0, max(n, 0)), dtype=np.int8)
        X = sign_matrix(X)
        y = np.asarray(self.y, dtype=np.int8).reshape(-1)
        if X.shape[0] != y.shape[0]:
            raise ValueError(f"{X.shape[0]} inputs but {y.shape[0]} labels")
        if y.size and not np.all((y == 1) | (y == -1)):
            raise ValueError("labels must be -1 or +1")
        if n >= 0 and X.shape[1] != n:
            raise ValueError(f"inputs have length {X.shape[1]}, expected {n}")
        y = y.copy()
        y.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "N", X.shape[1])

    @classmethod
    def from_samples(cls, samples: Sequence[Sample], N: int | None = None) -> "Dataset":
        samples = list(samples)
        if not samples:
            if N is None:
                raise ValueError("N is required for an empty dataset")
            return cls(np.zeros((0, N), dtype=np.int8), np.zeros(0, dtype=np.int8), N)
        X = np.stack([s.input for s in samples])
        y = np.array([s.label for s in samples], dtype=np.int8)
        return cls(X, y, N if N is not None else -1)

    @property
    def samples(self) -> list[Sample]:
        return list(self)

    def subset(self, idx) -> "Dataset":
        idx = np.asarray(idx, dtype=np.intp)
        return Dataset(self.X[idx], self.y[idx], self.N)

    def __len__(self) -> int:
        return self.X.shape[0]

    def __iter__(self) -> Iterator[Sample]:
        for x, label in zip(self.X, self.y):
            yield Sample(x, int(label))

    def __getitem__(self, i: int) -> Sample:
        return Sample(self.X[i], int(self.y[i]))

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return (
            self.N == other.N
            and np.array_equal(self.X, other.X)
            and np.array_equal(self.y, other.y)
        )
