"""Perceptron-like sign-flip training of each hidden neuron, majority-vote readout."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import Dataset, SeededRng
from .model import ModelConfig
from .response import ResponseKind, response
from .svo import TrainRecord, accuracy, record_iterations

THRESHOLD = 0.5


@dataclass(frozen=True)
class SignFlipConfig:
    flip_fraction: float = 0.625
    iterations: int = 4000
    threshold: float = THRESHOLD
    record_every: int = 10
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.flip_fraction <= 1.0:
            raise ValueError("flip_fraction must lie in (0, 1]")
        if self.iterations < 0:
            raise ValueError("iterations must be >= 0")
        if self.record_every < 1:
            raise ValueError("record_every must be >= 1")


def _decisions(X, Wq, kind, threshold: float, negated_linear: bool = False) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    Wq = np.asarray(Wq, dtype=float)
    ip = X @ Wq.T / X.shape[-1]
    p = response(kind, ip, negated_linear=negated_linear)
    return np.where(np.asarray(p) > threshold, 1, -1)


def neuron_decision(x, w_m, kind: ResponseKind | str, threshold: float = THRESHOLD) -> int:
    """+1 iff the neuron's exact firing probability exceeds the threshold."""
    x, w_m = np.asarray(x), np.asarray(w_m)
    if x.shape != w_m.shape:
        raise ValueError(f"length mismatch: {x.shape[0]} != {w_m.shape[0]}")
    return int(_decisions(x[None, :], w_m[None, :], kind, threshold)[0, 0])


def flip_update(w_m, x, label: int, decision: int, cfg: SignFlipConfig, rng: SeededRng) -> np.ndarray:
    """Flip a fraction of the eligible signs of ``w_m`` after a misclassification.

    False positives flip among positions where ``w_m`` and ``x`` agree, pushing
    the neuron away from ``x``; false negatives flip among positions where they
    differ, pulling it closer. ``ceil(flip_fraction * |eligible|)`` positions
    are chosen uniformly without replacement.
    """
    w_m = np.asarray(w_m)
    x = np.asarray(x)
    if decision == label:
        return w_m
    eligible = np.flatnonzero(w_m == x) if decision > 0 else np.flatnonzero(w_m != x)
    if eligible.size == 0:
        return w_m
    k = min(math.ceil(cfg.flip_fraction * eligible.size), eligible.size)
    out = w_m.copy()
    out[eligible[rng.choice(eligible.size, k)]] *= -1
    return out


def majority_predict(x, quantum_weights, kind: ResponseKind | str, threshold: float = THRESHOLD) -> int:
    """+1 iff at least half of the neurons decide +1."""
    X = np.asarray(x)[None, :]
    return int(majority_predict_batch(X, quantum_weights, kind, threshold)[0])


def majority_predict_batch(X, quantum_weights, kind, threshold: float = THRESHOLD,
                           negated_linear: bool = False) -> np.ndarray:
    Wq = np.asarray(quantum_weights)
    if Wq.ndim != 2 or Wq.shape[0] < 1:
        raise ValueError("need at least one neuron")
    votes = np.sum(_decisions(X, Wq, kind, threshold, negated_linear) > 0, axis=1)
    return np.where(votes >= math.ceil(Wq.shape[0] / 2), 1, -1).astype(np.int8)


def train_signflip(train_set: Dataset, test_set: Dataset, model_cfg: ModelConfig,
                   cfg: SignFlipConfig, *, trial: int = 0):
    """Train the M neurons independently; returns ``(quantum_weights, records)``.

    Each iteration presents one uniformly drawn training sample to every
    neuron in index order. ``loss_estimate`` in the records is the fraction
    of neurons that misclassified that sample.
    """
    if len(train_set) == 0:
        raise ValueError("training set is empty")
    for name, ds in (("training", train_set), ("test", test_set)):
        if ds.N != model_cfg.N:
            raise ValueError(f"{name} inputs have length {ds.N}, expected N={model_cfg.N}")
    kind = model_cfg.hidden_response
    neg = model_cfg.negated_linear
    rng = SeededRng(cfg.seed).derive(0)
    W = np.where(rng.random((model_cfg.M, model_cfg.N)) < 0.5, 1, -1).astype(np.int8)
    checkpoints = set(record_iterations(cfg.iterations, cfg.record_every))

    def make_record(i: int, err: float) -> TrainRecord:
        tr = majority_predict_batch(train_set.X, W, kind, cfg.threshold, neg)
        te = majority_predict_batch(test_set.X, W, kind, cfg.threshold, neg) if len(test_set) else []
        return TrainRecord(trial, i, cfg.flip_fraction, err,
                           accuracy(tr, train_set.y), accuracy(te, test_set.y))

    records = []
    if cfg.iterations == 0:
        records.append(make_record(0, float("nan")))
    for i in range(cfg.iterations):
        s = int(rng.integers(len(train_set)))
        x, label = train_set.X[s], int(train_set.y[s])
        decisions = _decisions(x[None, :], W, kind, cfg.threshold, neg)[0]
        for m in range(model_cfg.M):
            W[m] = flip_update(W[m], x, label, int(decisions[m]), cfg, rng)
        if i + 1 in checkpoints:
            records.append(make_record(i + 1, float(np.mean(decisions != label))))
    return W, records
