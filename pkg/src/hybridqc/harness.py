"""Experiment orchestration: configuration, multi-trial runs and file outputs.

A run directory contains one metrics CSV per trial, a mean-curve CSV, the
trained model of every trial, the datasets each trial used, and
``metadata.json`` with the fully resolved configuration.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from . import __version__
from .bas import BasConfig, generate_dataset, load_dataset, positive_overlap, save_dataset
from .core import Dataset, SeededRng
from .model import ModelConfig, predict_batch
from .qsim import ancilla_probability
from .response import ResponseKind, response
from .signflip import SignFlipConfig, majority_predict_batch, train_signflip
from .svo import SvoConfig, TrainRecord, VariationalParams, train

log = logging.getLogger(__name__)

METRICS_HEADER = ["trial", "iteration", "lr", "loss_estimate", "train_accuracy", "test_accuracy"]
MEAN_HEADER = [
    "iteration",
    "mean_test_accuracy",
    "std_test_accuracy",
    "mean_train_accuracy",
    "std_train_accuracy",
]

SVO_DEVIATIONS = [
    "learning-rate cycle index uses floor(1 + i/(2s)) instead of the ceiling of the reference formula",
    "learning rate clamped to [eta_base, eta_max]; the reference amplitude factor reaches 1.7",
    "update descends the loss bound (phi <- phi - eta * delta); the reference rule uses +eta",
    "baseline numerator averages L * grad^2 (variance-optimal form) unless baseline=squared",
]
SIGNFLIP_DEVIATIONS = [
    "neuron decisions threshold the exact response value instead of a sampled measurement",
]


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ModelSection:
    M: int = 32
    hidden_response: str = "q"
    output_response: str = "sigmoid"
    negated_linear: bool = False


@dataclass(frozen=True)
class DataSection:
    train: str | None = None
    test: str | None = None


@dataclass(frozen=True)
class ExperimentConfig:
    method: str = "svo"
    trials: int = 5
    seed: int = 0
    record_every: int = 10
    model: ModelSection = field(default_factory=ModelSection)
    svo: SvoConfig | None = field(default_factory=SvoConfig)
    signflip: SignFlipConfig | None = None
    bas: BasConfig = field(default_factory=BasConfig)
    data: DataSection = field(default_factory=DataSection)
    output_dir: str = "runs/out"

    def __post_init__(self):
        if self.method not in ("svo", "signflip"):
            raise ConfigError(f"method must be 'svo' or 'signflip', got {self.method!r}")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if self.record_every < 1:
            raise ConfigError("record_every must be >= 1")
        active = self.svo if self.method == "svo" else self.signflip
        inactive = self.signflip if self.method == "svo" else self.svo
        if active is None or inactive is not None:
            raise ConfigError("exactly the section of the selected method must be populated")
        if (self.data.train is None) != (self.data.test is None):
            raise ConfigError("data.train and data.test must be given together")

    @property
    def N(self) -> int:
        return self.bas.d * self.bas.d

    def model_config(self, N: int | None = None) -> ModelConfig:
        return ModelConfig(
            N=N if N is not None else self.N,
            M=self.model.M,
            hidden_response=ResponseKind.parse(self.model.hidden_response),
            output_response=ResponseKind.parse(self.model.output_response),
            negated_linear=self.model.negated_linear,
        )

    def to_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)


def _section(cls, raw: Any, name: str, **injected):
    """Build ``cls`` from a config mapping; ``injected`` fields are not user-settable here."""
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError(f"section {name!r} must be a mapping")
    known = {f.name for f in dataclasses.fields(cls)} - set(injected)
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown keys in {name!r}: {', '.join(sorted(unknown))}")
    try:
        return cls(**raw, **injected)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid {name!r} section: {exc}") from None


def build_config(raw: dict | None = None, **overrides) -> ExperimentConfig:
    """Resolve a config mapping (as read from YAML) plus CLI overrides.

    Overrides: ``method``, ``response``, ``trials``, ``seed``, ``iterations``,
    ``output_dir``. Every field not given falls back to the reference run settings.
    """
    raw = dict(raw or {})
    top = {"method", "trials", "seed", "record_every", "model", "svo", "signflip", "bas",
           "data", "output_dir"}
    unknown = set(raw) - top
    if unknown:
        raise ConfigError(f"unknown top-level keys: {', '.join(sorted(unknown))}")
    method = overrides.get("method") or raw.get("method", "svo")
    model_raw = dict(raw.get("model") or {})
    if overrides.get("response"):
        model_raw["hidden_response"] = overrides["response"]
    model = _section(ModelSection, model_raw, "model")
    try:
        ResponseKind.parse(model.hidden_response)
        ResponseKind.parse(model.output_response)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None

    seed = int(overrides.get("seed") if overrides.get("seed") is not None else raw.get("seed", 0))
    record_every = int(raw.get("record_every", 10))
    svo = signflip = None
    if method == "svo":
        svo_raw = dict(raw.get("svo") or {})
        if overrides.get("iterations") is not None:
            svo_raw["iterations"] = overrides["iterations"]
        svo = _section(SvoConfig, svo_raw, "svo", record_every=record_every, seed=seed)
    elif method == "signflip":
        sf_raw = dict(raw.get("signflip") or {})
        if overrides.get("iterations") is not None:
            sf_raw["iterations"] = overrides["iterations"]
        signflip = _section(SignFlipConfig, sf_raw, "signflip", record_every=record_every,
                            seed=seed)
    else:
        raise ConfigError(f"method must be 'svo' or 'signflip', got {method!r}")
    bas = _section(BasConfig, raw.get("bas"), "bas", seed=seed)
    data = _section(DataSection, raw.get("data"), "data")
    trials = overrides.get("trials") if overrides.get("trials") is not None else raw.get("trials", 5)
    output_dir = overrides.get("output_dir") or raw.get("output_dir", "runs/out")
    return ExperimentConfig(
        method=method,
        trials=int(trials),
        seed=seed,
        record_every=record_every,
        model=model,
        svo=svo,
        signflip=signflip,
        bas=bas,
        data=data,
        output_dir=str(output_dir),
    )


def load_config(path: str | os.PathLike | None, **overrides) -> ExperimentConfig:
    raw = {}
    if path is not None:
        with open(path, encoding="utf-8") as fh:
            raw = yaml.safe_load(fh) or {}
        if not isinstance(raw, dict):
            raise ConfigError(f"{path}: top level must be a mapping")
    return build_config(raw, **overrides)


# --------------------------------------------------------------------- trials


def trial_datasets(cfg: ExperimentConfig, trial: int) -> tuple[Dataset, Dataset]:
    if cfg.data.train is not None:
        return load_dataset(cfg.data.train), load_dataset(cfg.data.test)
    return generate_dataset(dataclasses.replace(cfg.bas, seed=cfg.seed + trial))


def run_trial(cfg: ExperimentConfig, trial: int) -> dict[str, Any]:
    """Run one independent trial with seed ``cfg.seed + trial``."""
    seed = cfg.seed + trial
    train_set, test_set = trial_datasets(cfg, trial)
    model_cfg = cfg.model_config(train_set.N)
    if cfg.method == "svo":
        phi, records = train(train_set, test_set, model_cfg,
                             dataclasses.replace(cfg.svo, seed=seed), trial=trial)
        model = svo_model_payload(model_cfg, phi)
    else:
        W, records = train_signflip(train_set, test_set, model_cfg,
                                    dataclasses.replace(cfg.signflip, seed=seed), trial=trial)
        model = signflip_model_payload(model_cfg, W, cfg.signflip.threshold)
    return {
        "trial": trial,
        "seed": seed,
        "records": records,
        "model": model,
        "train": train_set,
        "test": test_set,
        "positive_overlap": positive_overlap(train_set, test_set),
    }


def _model_dict(model_cfg: ModelConfig) -> dict[str, Any]:
    return {
        "N": model_cfg.N,
        "M": model_cfg.M,
        "hidden_response": model_cfg.hidden_response.value,
        "output_response": model_cfg.output_response.value,
        "negated_linear": model_cfg.negated_linear,
    }


def svo_model_payload(model_cfg: ModelConfig, phi: VariationalParams) -> dict[str, Any]:
    return {
        "method": "svo",
        "model": _model_dict(model_cfg),
        "phi_q": phi.phi_q.tolist(),
        "phi_c": phi.phi_c.tolist(),
    }


def signflip_model_payload(model_cfg: ModelConfig, W, threshold: float) -> dict[str, Any]:
    return {
        "method": "signflip",
        "model": _model_dict(model_cfg),
        "threshold": threshold,
        "quantum_weights": np.asarray(W).astype(int).tolist(),
    }


# -------------------------------------------------------------------- outputs


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    v = float(v)
    return "nan" if math.isnan(v) else repr(v)


def write_metrics_csv(path: Path, records: list[TrainRecord]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(METRICS_HEADER)
        for r in records:
            writer.writerow([_fmt(getattr(r, k)) for k in METRICS_HEADER])


def mean_curve(per_trial: list[list[TrainRecord]]) -> list[list[float]]:
    """Per-iteration mean and population std of the accuracies across trials."""
    iterations = [r.iteration for r in per_trial[0]]
    for recs in per_trial[1:]:
        if [r.iteration for r in recs] != iterations:
            raise ValueError("trials recorded different iterations")
    test = np.array([[r.test_accuracy for r in recs] for recs in per_trial])
    train_ = np.array([[r.train_accuracy for r in recs] for recs in per_trial])
    return [
        [it, test[:, j].mean(), test[:, j].std(), train_[:, j].mean(), train_[:, j].std()]
        for j, it in enumerate(iterations)
    ]


def write_mean_csv(path: Path, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(MEAN_HEADER)
        for row in rows:
            writer.writerow([_fmt(int(row[0]))] + [_fmt(v) for v in row[1:]])


def _dump_json(path: Path, obj) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _run_trial_star(args):
    return run_trial(*args)


def run_experiment(cfg: ExperimentConfig, jobs: int = 1) -> dict[str, Any]:
    """Run every trial, write the output tree and return a short summary."""
    out = Path(cfg.output_dir)
    (out / "data").mkdir(parents=True, exist_ok=True)
    tasks = [(cfg, k) for k in range(cfg.trials)]
    if jobs > 1 and cfg.trials > 1:
        with ProcessPoolExecutor(max_workers=min(jobs, cfg.trials)) as pool:
            results = list(pool.map(_run_trial_star, tasks))
    else:
        results = [_run_trial_star(t) for t in tasks]

    for res in results:
        k = res["trial"]
        write_metrics_csv(out / f"metrics_trial{k}.csv", res["records"])
        _dump_json(out / f"model_trial{k}.json", res["model"])
        save_dataset(res["train"], out / "data" / f"trial{k}_train.csv")
        save_dataset(res["test"], out / "data" / f"trial{k}_test.csv")
    rows = mean_curve([res["records"] for res in results])
    write_mean_csv(out / "mean_curve.csv", rows)

    metadata = {
        "artifact": "hybridqc",
        "version": __version__,
        "config": cfg.to_dict(),
        "deviations": SVO_DEVIATIONS if cfg.method == "svo" else SIGNFLIP_DEVIATIONS,
        "trials": [
            {"trial": r["trial"], "seed": r["seed"], "positive_overlap": r["positive_overlap"]}
            for r in results
        ],
    }
    _dump_json(out / "metadata.json", metadata)
    final = rows[-1]
    return {
        "output_dir": str(out),
        "trials": cfg.trials,
        "rows": len(rows),
        "final_iteration": int(final[0]),
        "final_mean_test_accuracy": float(final[1]),
        "final_mean_train_accuracy": float(final[3]),
    }


# ------------------------------------------------------------- verification


SUPPORTED_VERIFY_N = (2, 4, 8, 16)


def verify_circuit(N: int, *, random_pairs: int = 10_000, seed: int = 0) -> dict[str, Any]:
    """Compare the simulated ancilla probability with the quadratic response.

    All ``4**N`` pairs are checked for ``N <= 4``; larger ``N`` uses random pairs.
    """
    if N not in SUPPORTED_VERIFY_N:
        raise ValueError(f"N must be one of {SUPPORTED_VERIFY_N}, got {N}")
    if N <= 4:
        vecs = np.array(np.meshgrid(*[[-1, 1]] * N, indexing="ij")).reshape(N, -1).T
        pairs = [(x, w) for x in vecs for w in vecs]
    else:
        rng = SeededRng(seed)
        draws = np.where(rng.random((random_pairs, 2, N)) < 0.5, 1, -1)
        pairs = [(d[0], d[1]) for d in draws]
    worst = 0.0
    for x, w in pairs:
        ip = float(np.dot(x, w)) / N
        expected = ip * ip
        worst = max(worst, abs(ancilla_probability(x, w) - expected))
        # the clamped response agrees with the circuit away from the clamp region
        if 1e-6 < expected < 1 - 1e-6:
            worst = max(worst, abs(ancilla_probability(x, w) - response("q", ip)))
    return {"N": N, "pairs": len(pairs), "max_deviation": worst, "passed": worst < 1e-10}


def load_model(path: str | os.PathLike) -> dict[str, Any]:
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    if payload.get("method") not in ("svo", "signflip"):
        raise ValueError(f"{path}: unknown model method {payload.get('method')!r}")
    return payload


def evaluate(model_path, data_path, K: int = 100, seed: int = 0) -> float:
    """Accuracy of a saved model on a dataset file."""
    payload = load_model(model_path)
    data = load_dataset(data_path)
    m = payload["model"]
    model_cfg = ModelConfig(m["N"], m["M"], m["hidden_response"], m["output_response"],
                            m.get("negated_linear", False))
    if data.N != model_cfg.N:
        raise ValueError(f"dataset inputs have length {data.N}, model expects N={model_cfg.N}")
    if len(data) == 0:
        raise ValueError("dataset is empty")
    if payload["method"] == "svo":
        phi = VariationalParams(payload["phi_q"], payload["phi_c"])
        pred = predict_batch(data.X, phi.mode(), model_cfg, SeededRng(seed), K)
    else:
        W = np.asarray(payload["quantum_weights"])
        if W.shape != (model_cfg.M, model_cfg.N):
            raise ValueError(f"weights have shape {W.shape}, expected {(model_cfg.M, model_cfg.N)}")
        pred = majority_predict_batch(data.X, W, model_cfg.hidden_response,
                                      payload.get("threshold", 0.5), model_cfg.negated_linear)
    return float(np.mean(pred == data.y))


__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "build_config",
    "evaluate",
    "load_config",
    "mean_curve",
    "run_experiment",
    "run_trial",
    "verify_circuit",
]
