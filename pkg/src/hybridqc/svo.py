"""Stochastic variational optimization of the binary weights.

Every binary weight gets an independent Bernoulli search distribution with
natural parameter ``phi`` (``P(w = +1) = sigmoid(phi)``). Training descends the
expected loss bound over that distribution using the score-function
(REINFORCE) estimator with a per-parameter variance-minimizing baseline.

Parameters are kept flat in the canonical order: ``phi_q`` row-major
(neuron, input), then ``phi_c``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace
from typing import Literal

import numpy as np

from .core import Dataset, ModelWeights, SeededRng
from .model import ModelConfig, bce_loss, hidden_probs_batch, output_probs_batch, predict_batch
from .response import sigmoid

log = logging.getLogger(__name__)

BASELINE_GUARD = 1e-12

BaselineForm = Literal["optimal", "squared", "none"]


@dataclass(frozen=True, eq=False)
class VariationalParams:
    phi_q: np.ndarray
    phi_c: np.ndarray

    def __post_init__(self):
        q = np.array(self.phi_q, dtype=float)
        c = np.array(self.phi_c, dtype=float).reshape(-1)
        if q.ndim != 2 or q.shape[0] != c.shape[0]:
            raise ValueError(f"phi_q shape {q.shape} incompatible with phi_c length {c.shape[0]}")
        if not (np.all(np.isfinite(q)) and np.all(np.isfinite(c))):
            raise ValueError("variational parameters must be finite")
        object.__setattr__(self, "phi_q", q)
        object.__setattr__(self, "phi_c", c)

    @classmethod
    def zeros(cls, M: int, N: int) -> "VariationalParams":
        return cls(np.zeros((M, N)), np.zeros(M))

    @classmethod
    def from_flat(cls, flat, M: int, N: int) -> "VariationalParams":
        flat = np.asarray(flat, dtype=float)
        if flat.shape != (M * N + M,):
            raise ValueError(f"expected {M * N + M} parameters, got {flat.shape}")
        return cls(flat[: M * N].reshape(M, N), flat[M * N :])

    @property
    def M(self) -> int:
        return self.phi_q.shape[0]

    @property
    def N(self) -> int:
        return self.phi_q.shape[1]

    @property
    def size(self) -> int:
        return self.M * self.N + self.M

    def flat(self) -> np.ndarray:
        return np.concatenate([self.phi_q.ravel(), self.phi_c])

    def mode(self) -> ModelWeights:
        """Most probable weights under q: ``sign(phi)`` with ties to +1."""
        return ModelWeights(
            np.where(self.phi_q >= 0, 1, -1), np.where(self.phi_c >= 0, 1, -1)
        )

    def __eq__(self, other):
        if not isinstance(other, VariationalParams):
            return NotImplemented
        return np.array_equal(self.phi_q, other.phi_q) and np.array_equal(self.phi_c, other.phi_c)


@dataclass(frozen=True)
class BaselineState:
    """Moving averages of ``E[L g^2]`` (numerator) and ``E[g^2]`` (denominator) per parameter."""

    numerator_avg: np.ndarray
    denominator_avg: np.ndarray
    gamma: float = 0.9
    form: BaselineForm = "optimal"

    @classmethod
    def zeros(cls, size: int, gamma: float = 0.9, form: BaselineForm = "optimal") -> "BaselineState":
        if not 0.0 < gamma < 1.0:
            raise ValueError("gamma must lie in (0, 1)")
        if form not in ("optimal", "squared", "none"):
            raise ValueError(f"unknown baseline form {form!r}")
        return cls(np.zeros(size), np.zeros(size), gamma, form)


@dataclass(frozen=True)
class SvoConfig:
    T: int = 10
    batch_size: int = 16
    iterations: int = 4000
    eta_base: float = 0.1
    eta_max: float = 0.9
    step_size: int = 1000
    gamma: float = 0.9
    baseline: BaselineForm = "optimal"
    phi_init_scale: float = 0.0
    record_every: int = 10
    eval_k: int = 100
    seed: int = 0

    def __post_init__(self):
        if self.T < 1:
            raise ValueError("T must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.iterations < 0:
            raise ValueError("iterations must be >= 0")
        if not 0.0 < self.eta_base <= self.eta_max:
            raise ValueError("need 0 < eta_base <= eta_max")
        if self.step_size < 1:
            raise ValueError("step_size must be >= 1")
        if not 0.0 < self.gamma < 1.0:
            raise ValueError("gamma must lie in (0, 1)")
        if self.baseline not in ("optimal", "squared", "none"):
            raise ValueError(f"unknown baseline form {self.baseline!r}")
        if self.record_every < 1:
            raise ValueError("record_every must be >= 1")
        if self.eval_k < 1:
            raise ValueError("eval_k must be >= 1")


@dataclass
class TrainRecord:
    trial: int
    iteration: int
    lr: float
    loss_estimate: float
    train_accuracy: float
    test_accuracy: float


def sample_weights(phi: VariationalParams, rng: SeededRng) -> ModelWeights:
    """Draw binary weights from q(w | phi), consuming draws in canonical flat order."""
    w = rng.bernoulli_sign(sigmoid(phi.flat()))
    M, N = phi.M, phi.N
    return ModelWeights(w[: M * N].reshape(M, N), w[M * N :])


def log_q_gradient(phi: VariationalParams, w: ModelWeights) -> np.ndarray:
    """Score ``(1 + w)/2 - sigmoid(phi)`` per parameter, flat canonical order."""
    if w.quantum.shape != phi.phi_q.shape or w.classical.shape != phi.phi_c.shape:
        raise ValueError(
            f"weights {w.quantum.shape}/{w.classical.shape} do not match "
            f"parameters {phi.phi_q.shape}/{phi.phi_c.shape}"
        )
    flat_w = np.concatenate([w.quantum.ravel(), w.classical]).astype(float)
    return (1.0 + flat_w) / 2.0 - sigmoid(phi.flat())


def _batch_losses(batch: Dataset, Wq, Wc, cfg: ModelConfig, dataset_size: int, rng: SeededRng):
    """Scaled batch loss for each of the leading weight samples in ``Wq`` (T, M, N), ``Wc`` (T, M)."""
    probs = hidden_probs_batch(batch.X[None, :, :], Wq, cfg)  # (T, B, M)
    u = rng.random(probs.shape)
    Y = np.where(u < probs, 1, -1)
    p_out = output_probs_batch(Y, Wc[:, None, :], cfg)  # (T, B)
    losses = bce_loss(batch.y[None, :], p_out)
    return dataset_size / len(batch) * np.sum(losses, axis=-1)


def batch_loss(batch: Dataset, w: ModelWeights, cfg: ModelConfig, dataset_size: int, rng: SeededRng) -> float:
    """``|D| / |D_b|`` times the summed single-draw loss estimates over the mini-batch.

    Draws one hidden vector per sample, in batch order.
    """
    if len(batch) == 0:
        raise ValueError("mini-batch is empty")
    cfg.check_weights(w)
    return float(_batch_losses(batch, w.quantum[None], w.classical[None], cfg, dataset_size, rng)[0])


def update_baseline(state: BaselineState, loss, grad) -> BaselineState:
    """Fold one step's ``(loss, grad)`` samples into the moving averages.

    ``loss`` is a scalar or a length-T array; ``grad`` is (P,) or (T, P). The
    step contributes the sample means of the two statistics.
    """
    loss = np.atleast_1d(np.asarray(loss, dtype=float))
    grad = np.atleast_2d(np.asarray(grad, dtype=float))
    if grad.shape[0] != loss.shape[0]:
        raise ValueError(f"{loss.shape[0]} losses but {grad.shape[0]} gradients")
    g2 = grad**2
    if state.form == "squared":
        num = np.mean((loss[:, None] * grad) ** 2, axis=0)
    else:
        num = np.mean(loss[:, None] * g2, axis=0)
    den = np.mean(g2, axis=0)
    gm = state.gamma
    return replace(
        state,
        numerator_avg=gm * state.numerator_avg + (1.0 - gm) * num,
        denominator_avg=gm * state.denominator_avg + (1.0 - gm) * den,
    )


def baseline(state: BaselineState) -> np.ndarray:
    """Current per-parameter baseline (zero where no gradient signal has been seen)."""
    if state.form == "none":
        return np.zeros_like(state.numerator_avg)
    return state.numerator_avg / (state.denominator_avg + BASELINE_GUARD)


def cyclical_lr(i: int, cfg: SvoConfig) -> float:
    """Cyclical learning rate at iteration ``i`` (cycle index via floor, then clamped)."""
    if i < 0:
        raise ValueError("iteration must be >= 0")
    s = cfg.step_size
    c = math.floor(1 + i / (2 * s))
    t = abs(i / s - 2 * c + 1)
    eta = cfg.eta_base + (cfg.eta_max - cfg.eta_base) * max(0.0, 1.0 - t) * (
        1.0 + math.sin(c * math.pi / 2)
    )
    return min(max(eta, cfg.eta_base), cfg.eta_max)


def svo_step(
    phi: VariationalParams,
    state: BaselineState,
    batch: Dataset,
    cfg: ModelConfig,
    svo_cfg: SvoConfig,
    rng: SeededRng,
    *,
    lr: float,
    dataset_size: int | None = None,
):
    """One update of ``phi`` from ``svo_cfg.T`` weight samples on ``batch``.

    Draw order: the T weight samples (each in canonical flat order), then the
    hidden draws for sample t = 1..T, each in batch order.

    Returns ``(phi', state', metrics)`` where metrics holds ``loss`` (mean
    scaled batch loss), ``grad_norm``, ``lr`` and ``update`` (the descent
    direction before scaling by ``lr``).
    """
    if len(batch) == 0:
        raise ValueError("mini-batch is empty")
    if dataset_size is None:
        dataset_size = len(batch)
    M, N, T = phi.M, phi.N, svo_cfg.T
    if (M, N) != (cfg.M, cfg.N):
        raise ValueError(f"parameters are {M}x{N}, model expects {cfg.M}x{cfg.N}")

    probs = sigmoid(phi.flat())
    W = np.where(rng.random((T, probs.size)) < probs, 1, -1)
    Wq = W[:, : M * N].reshape(T, M, N)
    Wc = W[:, M * N :]
    losses = _batch_losses(batch, Wq, Wc, cfg, dataset_size, rng)
    grads = (1.0 + W) / 2.0 - probs

    state = update_baseline(state, losses, grads)
    b = baseline(state)
    update = np.mean((losses[:, None] - b) * grads, axis=0)
    new_phi = VariationalParams.from_flat(phi.flat() - lr * update, M, N)
    metrics = {
        "loss": float(np.mean(losses)),
        "grad_norm": float(np.linalg.norm(update)),
        "lr": float(lr),
        "update": update,
    }
    return new_phi, state, metrics


def record_iterations(iterations: int, every: int) -> list[int]:
    """Iterations at which metrics are recorded: multiples of ``every`` plus the last one."""
    points = list(range(every, iterations + 1, every))
    if not points or points[-1] != iterations:
        points.append(iterations)
    return points


def accuracy(pred, labels) -> float:
    labels = np.asarray(labels)
    if labels.size == 0:
        return float("nan")
    return float(np.mean(np.asarray(pred) == labels))


def init_params(cfg: ModelConfig, svo_cfg: SvoConfig, rng: SeededRng) -> VariationalParams:
    if svo_cfg.phi_init_scale == 0.0:
        return VariationalParams.zeros(cfg.M, cfg.N)
    flat = svo_cfg.phi_init_scale * (2.0 * rng.random(cfg.M * cfg.N + cfg.M) - 1.0)
    return VariationalParams.from_flat(flat, cfg.M, cfg.N)


def train(
    train_set: Dataset,
    test_set: Dataset,
    cfg: ModelConfig,
    svo_cfg: SvoConfig,
    *,
    trial: int = 0,
):
    """Run SVO for ``svo_cfg.iterations`` steps and return ``(phi, records)``.

    Records are evaluated at the mode weights ``sign(phi)`` with the K-sample
    prediction rule, on an rng stream separate from the training stream.
    """
    if len(train_set) == 0:
        raise ValueError("training set is empty")
    for name, ds in (("training", train_set), ("test", test_set)):
        if ds.N != cfg.N:
            raise ValueError(f"{name} inputs have length {ds.N}, expected N={cfg.N}")

    root = SeededRng(svo_cfg.seed)
    rng = root.derive(0)
    eval_rng = root.derive(1)
    phi = init_params(cfg, svo_cfg, rng)
    state = BaselineState.zeros(phi.size, svo_cfg.gamma, svo_cfg.baseline)
    batch_size = min(svo_cfg.batch_size, len(train_set))
    checkpoints = set(record_iterations(svo_cfg.iterations, svo_cfg.record_every))

    def make_record(i: int, lr: float, loss: float) -> TrainRecord:
        w = phi.mode()
        tr = predict_batch(train_set.X, w, cfg, eval_rng, svo_cfg.eval_k)
        te = predict_batch(test_set.X, w, cfg, eval_rng, svo_cfg.eval_k) if len(test_set) else []
        return TrainRecord(trial, i, lr, loss, accuracy(tr, train_set.y), accuracy(te, test_set.y))

    records = []
    if svo_cfg.iterations == 0:
        records.append(make_record(0, cyclical_lr(0, svo_cfg), float("nan")))
    for i in range(svo_cfg.iterations):
        lr = cyclical_lr(i, svo_cfg)
        batch = train_set.subset(rng.choice(len(train_set), batch_size))
        phi, state, metrics = svo_step(
            phi, state, batch, cfg, svo_cfg, rng, lr=lr, dataset_size=len(train_set)
        )
        if i + 1 in checkpoints:
            rec = make_record(i + 1, lr, metrics["loss"])
            records.append(rec)
            log.debug("trial %d iter %d loss %.4f train %.3f test %.3f", trial, i + 1,
                      rec.loss_estimate, rec.train_accuracy, rec.test_accuracy)
    return phi, records
