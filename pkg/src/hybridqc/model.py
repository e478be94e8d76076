"""Forward pass, loss bound and exact-enumeration oracles for the hybrid classifier.

A hidden layer of ``M`` stochastic binary neurons reads the amplitude-encoded
input; a sigmoid output neuron combines their ±1 outputs. The scalar
functions follow one sample at a time; the ``*_batch`` helpers are their
vectorized counterparts used by the trainers and consume the random stream
in exactly the same order.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .core import ModelWeights, Sample, SeededRng, is_power_of_two, sign_vector
from .response import EPS, ResponseKind, response

MAX_ENUMERATION_M = 20


@dataclass(frozen=True)
class ModelConfig:
    N: int
    M: int
    hidden_response: ResponseKind = ResponseKind.QUADRATIC
    output_response: ResponseKind = ResponseKind.SIGMOID
    negated_linear: bool = False

    def __post_init__(self):
        if not is_power_of_two(self.N):
            raise ValueError(f"N must be a power of two, got {self.N}")
        if self.M < 1:
            raise ValueError(f"M must be >= 1, got {self.M}")
        object.__setattr__(self, "hidden_response", ResponseKind.parse(self.hidden_response))
        object.__setattr__(self, "output_response", ResponseKind.parse(self.output_response))

    def check_weights(self, w: ModelWeights) -> None:
        if w.quantum.shape != (self.M, self.N):
            raise ValueError(
                f"quantum weights have shape {w.quantum.shape}, expected {(self.M, self.N)}"
            )

    def check_input(self, x) -> None:
        if len(x) != self.N:
            raise ValueError(f"input has length {len(x)}, expected N={self.N}")


@dataclass(frozen=True)
class ForwardTrace:
    hidden: np.ndarray
    hidden_probs: np.ndarray
    output_prob: float
    output: int


def hidden_prob(x, w_m, kind: ResponseKind | str, *, negated_linear: bool = False) -> float:
    """Probability that one hidden neuron outputs +1 for input ``x``."""
    x, w_m = np.asarray(x), np.asarray(w_m)
    if x.shape != w_m.shape:
        raise ValueError(f"length mismatch: {x.shape[0]} != {w_m.shape[0]}")
    ip = float(np.dot(x.astype(np.int64), w_m)) / x.shape[0]
    return response(kind, ip, negated_linear=negated_linear)


def hidden_probs_batch(X, Wq, cfg: ModelConfig) -> np.ndarray:
    """Hidden firing probabilities; ``X`` is (..., S, N), ``Wq`` is (..., M, N) -> (..., S, M)."""
    X = np.asarray(X, dtype=float)
    Wq = np.asarray(Wq, dtype=float)
    ip = np.matmul(X, np.swapaxes(Wq, -1, -2)) / cfg.N
    return response(cfg.hidden_response, ip, negated_linear=cfg.negated_linear)


def _output_activation(y, w_c, kind: ResponseKind):
    a = np.sum(np.asarray(y, dtype=float) * np.asarray(w_c, dtype=float), axis=-1)
    if kind.is_quantum:
        a = a / np.shape(w_c)[-1]
    return response(kind, a)


def output_prob(y, w_c, kind: ResponseKind | str = ResponseKind.SIGMOID) -> float:
    """Probability that the output neuron says +1 given hidden outputs ``y``.

    The sigmoid is applied to the raw dot product ``w_c . y``; other kinds get
    the dot product divided by ``M`` so it stays in [-1, 1].
    """
    y, w_c = np.asarray(y), np.asarray(w_c)
    if y.shape != w_c.shape:
        raise ValueError(f"length mismatch: {y.shape[0]} != {w_c.shape[0]}")
    return float(_output_activation(y, w_c, ResponseKind.parse(kind)))


def output_probs_batch(Y, w_c, cfg: ModelConfig) -> np.ndarray:
    """Vectorized :func:`output_prob`; ``w_c`` broadcasts against the leading axes of ``Y``."""
    return np.asarray(_output_activation(Y, w_c, cfg.output_response))


def sample_hidden(x, w: ModelWeights, cfg: ModelConfig, rng: SeededRng) -> np.ndarray:
    """Draw the M hidden outputs in neuron order, one uniform draw each."""
    probs = hidden_probs_batch(np.asarray(x)[None, :], w.quantum, cfg)[0]
    return rng.bernoulli_sign(probs)


def forward(x, w: ModelWeights, cfg: ModelConfig, rng: SeededRng) -> ForwardTrace:
    cfg.check_input(x)
    cfg.check_weights(w)
    probs = np.atleast_1d(hidden_probs_batch(np.asarray(x)[None, :], w.quantum, cfg)[0])
    hidden = rng.bernoulli_sign(probs)
    p_out = output_prob(hidden, w.classical, cfg.output_response)
    z = 1 if rng.random() < p_out else -1
    return ForwardTrace(sign_vector(hidden), probs, p_out, z)


def bce_loss(label: int, prob) -> float:
    """Negative log-probability of ``label`` under a Bernoulli(+1 w.p. ``prob``) output."""
    p = np.asarray(prob, dtype=float)
    if np.any((p <= 0.0) | (p >= 1.0)):
        raise ValueError(f"probability must lie strictly inside (0, 1), got {prob}")
    out = -np.where(np.asarray(label) > 0, np.log(p), np.log1p(-p))
    return float(out) if out.ndim == 0 else out


def loss_bound_estimate(sample: Sample, w: ModelWeights, cfg: ModelConfig, rng: SeededRng) -> float:
    """One-draw unbiased estimate of the expected output log-loss over hidden outputs."""
    cfg.check_input(sample.input)
    cfg.check_weights(w)
    y = sample_hidden(sample.input, w, cfg, rng)
    return bce_loss(sample.label, output_prob(y, w.classical, cfg.output_response))


def _all_hidden(M: int) -> np.ndarray:
    if M > MAX_ENUMERATION_M:
        raise ValueError(f"exact enumeration limited to M <= {MAX_ENUMERATION_M}, got {M}")
    return np.array(list(itertools.product((-1, 1), repeat=M)), dtype=np.int8)


def _hidden_law(sample: Sample, w: ModelWeights, cfg: ModelConfig):
    """All hidden configurations with their probabilities and output probabilities."""
    cfg.check_input(sample.input)
    cfg.check_weights(w)
    Y = _all_hidden(cfg.M)
    p1 = hidden_probs_batch(np.asarray(sample.input)[None, :], w.quantum, cfg)[0]
    weights = np.prod(np.where(Y > 0, p1, 1.0 - p1), axis=1)
    return weights, output_probs_batch(Y, w.classical, cfg)


def loss_bound_exact(sample: Sample, w: ModelWeights, cfg: ModelConfig) -> float:
    """Expected output log-loss, summing over all 2^M hidden configurations."""
    weights, p_out = _hidden_law(sample, w, cfg)
    return float(np.dot(weights, bce_loss(sample.label, p_out)))


def marginal_loss_exact(sample: Sample, w: ModelWeights, cfg: ModelConfig) -> float:
    """Log-loss of the label after marginalizing the hidden layer exactly."""
    weights, p_out = _hidden_law(sample, w, cfg)
    p_label = p_out if sample.label > 0 else 1.0 - p_out
    return float(-np.log(np.dot(weights, p_label)))


def predict(x, w: ModelWeights, cfg: ModelConfig, rng: SeededRng, K: int = 100) -> int:
    """Threshold the output probability averaged over ``K`` hidden draws (ties -> +1)."""
    if K < 1:
        raise ValueError("K must be >= 1")
    cfg.check_input(x)
    return int(predict_batch(np.asarray(x)[None, :], w, cfg, rng, K)[0])


def predict_batch(X, w: ModelWeights, cfg: ModelConfig, rng: SeededRng, K: int = 100) -> np.ndarray:
    """Vectorized :func:`predict`; sample ``s`` uses draws ``s*K*M .. (s+1)*K*M - 1``."""
    cfg.check_weights(w)
    probs = hidden_probs_batch(X, w.quantum, cfg)  # (S, M)
    u = rng.random((probs.shape[0], K, cfg.M))
    Y = np.where(u < probs[:, None, :], 1, -1)
    avg = output_probs_batch(Y, w.classical, cfg).mean(axis=1)
    return np.where(avg >= 0.5, 1, -1).astype(np.int8)


def predict_exact(x, w: ModelWeights, cfg: ModelConfig) -> int:
    """Threshold the exact marginal P(z = +1 | x) at 0.5 (small M only)."""
    weights, p_out = _hidden_law(Sample(x, 1), w, cfg)
    return 1 if float(np.dot(weights, p_out)) >= 0.5 else -1


__all__ = [
    "EPS",
    "ForwardTrace",
    "ModelConfig",
    "bce_loss",
    "forward",
    "hidden_prob",
    "hidden_probs_batch",
    "loss_bound_estimate",
    "loss_bound_exact",
    "marginal_loss_exact",
    "output_prob",
    "output_probs_batch",
    "predict",
    "predict_batch",
    "predict_exact",
    "sample_hidden",
]
