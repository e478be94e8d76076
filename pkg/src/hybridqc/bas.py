"""Bars-and-Stripes data: pattern enumeration, labelled splits and CSV I/O.

Grids are flattened row-major with +1 for a filled pixel and -1 for a blank
one. Bars and stripes are positives (+1); random grids that are neither are
negatives (-1).
"""

from __future__ import annotations

import csv
import io
import logging
import os
from dataclasses import dataclass

import numpy as np

from .core import Dataset, SeededRng

log = logging.getLogger(__name__)


class DatasetFormatError(ValueError):
    """Malformed dataset file; the message names the offending line and column."""


@dataclass(frozen=True)
class BasConfig:
    d: int = 4
    n_train: int = 30
    n_test: int = 30
    positive_fraction: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.d < 2:
            raise ValueError("d must be >= 2")
        if self.n_train < 1 or self.n_test < 1:
            raise ValueError("n_train and n_test must be >= 1")
        if not 0.0 <= self.positive_fraction <= 1.0:
            raise ValueError("positive_fraction must lie in [0, 1]")


def is_bars_or_stripes(x, d: int) -> bool:
    grid = np.asarray(x).reshape(d, d)
    bars = bool(np.all(grid == grid[0:1, :]))  # every column constant
    stripes = bool(np.all(grid == grid[:, 0:1]))  # every row constant
    return bars or stripes


def enumerate_bas_patterns(d: int) -> list[np.ndarray]:
    """All distinct bars and stripes patterns of a ``d x d`` grid (``2**(d+1) - 2`` of them).

    Bars come first (column values counted in binary, -1 before +1), then the
    stripes that are not already listed.
    """
    if d < 2:
        raise ValueError("d must be >= 2")
    levels = np.array(np.meshgrid(*[[-1, 1]] * d, indexing="ij"), dtype=np.int8).reshape(d, -1).T
    bars = [np.tile(line, (d, 1)).ravel() for line in levels]
    # constant lines give the all-filled / all-blank grids, already listed as bars
    stripes = [np.repeat(line, d) for line in levels if np.any(line != line[0])]
    return bars + stripes


def _random_negatives(count: int, d: int, rng: SeededRng) -> np.ndarray:
    out = np.empty((count, d * d), dtype=np.int8)
    filled = 0
    while filled < count:
        x = np.where(rng.random(d * d) < 0.5, 1, -1).astype(np.int8)
        if not is_bars_or_stripes(x, d):
            out[filled] = x
            filled += 1
    return out


def _split(positives: np.ndarray, n_neg: int, d: int, rng: SeededRng) -> Dataset:
    negatives = _random_negatives(n_neg, d, rng)
    X = np.concatenate([positives.reshape(-1, d * d), negatives])
    y = np.concatenate([np.ones(len(positives), np.int8), -np.ones(n_neg, np.int8)])
    order = rng.permutation(len(y))
    return Dataset(X[order], y[order], d * d)


def generate_dataset(cfg: BasConfig) -> tuple[Dataset, Dataset]:
    """Draw train and test splits; positives are kept disjoint across splits when possible."""
    patterns = np.stack(enumerate_bas_patterns(cfg.d))
    n_pat = len(patterns)
    pos_train = int(round(cfg.positive_fraction * cfg.n_train))
    pos_test = int(round(cfg.positive_fraction * cfg.n_test))
    for split, k in (("train", pos_train), ("test", pos_test)):
        if k > n_pat:
            raise ValueError(
                f"{k} positive {split} samples requested but only {n_pat} "
                f"bars/stripes patterns exist for d={cfg.d}"
            )
    rng = SeededRng(cfg.seed)
    order = rng.permutation(n_pat)
    train_idx = order[:pos_train]
    fresh = order[pos_train : pos_train + pos_test]
    overlap = pos_test - len(fresh)
    if overlap:
        reuse = train_idx[rng.choice(len(train_idx), overlap)]
        test_idx = np.concatenate([fresh, reuse])
        log.warning("%d test positives repeat training positives (only %d patterns)", overlap, n_pat)
    else:
        test_idx = fresh
    train = _split(patterns[train_idx], cfg.n_train - pos_train, cfg.d, rng)
    test = _split(patterns[test_idx], cfg.n_test - pos_test, cfg.d, rng)
    return train, test


def positive_overlap(train: Dataset, test: Dataset) -> int:
    """Number of positive test samples whose input also appears as a training positive."""
    seen = {x.tobytes() for x, label in zip(train.X, train.y) if label > 0}
    return sum(1 for x, label in zip(test.X, test.y) if label > 0 and x.tobytes() in seen)


def dumps_dataset(ds: Dataset) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow([f"x{i}" for i in range(ds.N)] + ["label"])
    for x, label in zip(ds.X, ds.y):
        writer.writerow([int(v) for v in x] + [int(label)])
    return buf.getvalue()


def save_dataset(ds: Dataset, path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(dumps_dataset(ds))


def loads_dataset(text: str, source: str = "<string>") -> Dataset:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows:
        raise DatasetFormatError(f"{source}: line 1: missing header")
    header = [h.strip() for h in rows[0]]
    n = len(header) - 1
    expected = [f"x{i}" for i in range(n)] + ["label"]
    if n < 1 or header != expected:
        raise DatasetFormatError(
            f"{source}: line 1: header must be 'x0,...,x{{N-1}},label', got {','.join(header)!r}"
        )
    X = np.empty((len(rows) - 1, n), dtype=np.int8)
    y = np.empty(len(rows) - 1, dtype=np.int8)
    for r, row in enumerate(rows[1:]):
        lineno = r + 2
        if len(row) != n + 1:
            raise DatasetFormatError(
                f"{source}: line {lineno}: expected {n + 1} fields, found {len(row)}"
            )
        for c, field_ in enumerate(row):
            try:
                v = int(field_.strip())
            except ValueError:
                v = None
            if v not in (-1, 1):
                what = "label" if c == n else "entry"
                raise DatasetFormatError(
                    f"{source}: line {lineno}, column {c + 1}: {what} must be -1 or 1, got {field_!r}"
                )
            if c == n:
                y[r] = v
            else:
                X[r, c] = v
    return Dataset(X, y, n)


def load_dataset(path: str | os.PathLike) -> Dataset:
    with open(path, encoding="utf-8", newline="") as fh:
        return loads_dataset(fh.read(), source=str(path))
