import csv
import json

import numpy as np
import pytest

from hybridqc import __version__
from hybridqc.bas import save_dataset
from hybridqc.cli import main
from hybridqc.core import Dataset
from hybridqc.harness import (
    MEAN_HEADER,
    METRICS_HEADER,
    ConfigError,
    build_config,
    evaluate,
    load_config,
    mean_curve,
    run_experiment,
    verify_circuit,
)
from hybridqc.svo import TrainRecord


def read_csv(path):
    with open(path, encoding="utf-8", newline="") as fh:
        return list(csv.reader(fh))


def small_config(tmp_path, **raw):
    base = {"trials": 2, "model": {"M": 4}, "svo": {"iterations": 30, "T": 3},
            "bas": {"d": 2, "n_train": 6, "n_test": 6}, "output_dir": str(tmp_path / "run")}
    base.update(raw)
    return build_config(base)


def test_defaults_follow_the_reference_run():
    cfg = build_config({})
    assert cfg.method == "svo" and cfg.trials == 5 and cfg.model.M == 32
    assert cfg.svo.iterations == 4000 and cfg.svo.batch_size == 16 and cfg.svo.T == 10
    assert cfg.bas.d == 4 and cfg.bas.n_train == 30 and cfg.record_every == 10


def test_overrides_and_method_sections():
    cfg = build_config({}, method="signflip", response="bq", trials=1, seed=4, iterations=7)
    assert cfg.signflip.iterations == 7 and cfg.svo is None
    assert cfg.model.hidden_response == "bq" and cfg.seed == 4 and cfg.signflip.seed == 4


@pytest.mark.parametrize("raw, pattern", [
    ({"method": "adam"}, "method"),
    ({"trials": 0}, "trials"),
    ({"modle": {}}, "unknown top-level"),
    ({"svo": {"T": 0}}, "svo"),
    ({"svo": {"learning_rate": 1}}, "unknown keys"),
    ({"model": {"hidden_response": "cubic"}}, "unknown response"),
    ({"data": {"train": "a.csv"}}, "together"),
])
def test_invalid_configs(raw, pattern):
    with pytest.raises(ConfigError, match=pattern):
        build_config(raw)


def test_load_config_yaml(tmp_path):
    path = tmp_path / "cfg.yaml"
    path.write_text("method: signflip\nsignflip:\n  flip_fraction: 0.5\nmodel:\n  M: 8\n")
    cfg = load_config(path)
    assert cfg.signflip.flip_fraction == 0.5 and cfg.model.M == 8
    path.write_text("- 1\n- 2\n")
    with pytest.raises(ConfigError):
        load_config(path)


def test_single_trial_zero_iterations(tmp_path):
    cfg = small_config(tmp_path, trials=1, svo={"iterations": 0})
    run_experiment(cfg)
    out = tmp_path / "run"
    metrics = read_csv(out / "metrics_trial0.csv")
    mean = read_csv(out / "mean_curve.csv")
    assert metrics[0] == METRICS_HEADER and len(metrics) == 2
    assert mean[0] == MEAN_HEADER and len(mean) == 2


def test_output_tree_and_metadata(tmp_path):
    cfg = small_config(tmp_path)
    summary = run_experiment(cfg)
    out = tmp_path / "run"
    assert summary["rows"] == 3
    for name in ("metrics_trial0.csv", "metrics_trial1.csv", "mean_curve.csv", "metadata.json",
                 "model_trial0.json", "data/trial1_test.csv"):
        assert (out / name).exists()
    meta = json.loads((out / "metadata.json").read_text())
    assert meta["version"] == __version__
    assert meta["config"]["svo"]["iterations"] == 30
    assert any("floor" in d for d in meta["deviations"])
    assert [t["seed"] for t in meta["trials"]] == [0, 1]


def test_mean_curve_recomputable_from_trials(tmp_path):
    cfg = small_config(tmp_path, trials=3)
    run_experiment(cfg)
    out = tmp_path / "run"
    per_trial = [read_csv(out / f"metrics_trial{k}.csv")[1:] for k in range(3)]
    for r, row in enumerate(read_csv(out / "mean_curve.csv")[1:]):
        test = [float(t[r][5]) for t in per_trial]
        train = [float(t[r][4]) for t in per_trial]
        assert int(row[0]) == int(per_trial[0][r][1])
        assert float(row[1]) == pytest.approx(np.mean(test), abs=1e-15)
        assert float(row[2]) == pytest.approx(np.std(test), abs=1e-15)
        assert float(row[3]) == pytest.approx(np.mean(train), abs=1e-15)
        assert float(row[4]) == pytest.approx(np.std(train), abs=1e-15)


def test_mean_curve_row_count_at_reference_cadence():
    recs = [[TrainRecord(k, i, 0.1, 1.0, 0.5, 0.5) for i in range(10, 4001, 10)] for k in range(5)]
    assert len(mean_curve(recs)) == 400


def test_mean_curve_rejects_misaligned_trials():
    a = [TrainRecord(0, 10, 0.1, 1.0, 0.5, 0.5)]
    b = [TrainRecord(1, 20, 0.1, 1.0, 0.5, 0.5)]
    with pytest.raises(ValueError):
        mean_curve([a, b])


def test_same_config_twice_gives_identical_files(tmp_path):
    cfg_a = small_config(tmp_path, output_dir=str(tmp_path / "a"))
    cfg_b = small_config(tmp_path, output_dir=str(tmp_path / "b"))
    run_experiment(cfg_a)
    run_experiment(cfg_b, jobs=2)
    for name in ("metrics_trial0.csv", "metrics_trial1.csv", "mean_curve.csv", "model_trial1.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_signflip_experiment(tmp_path):
    cfg = small_config(tmp_path, method="signflip", svo=None, signflip={"iterations": 20})
    run_experiment(cfg)
    rows = read_csv(tmp_path / "run" / "metrics_trial0.csv")
    assert len(rows) == 3 and float(rows[1][2]) == 0.625


def test_loaded_datasets_are_used(tmp_path):
    ds = Dataset([[1, 1, 1, 1], [1, -1, -1, 1]], [1, -1])
    save_dataset(ds, tmp_path / "d.csv")
    cfg = small_config(tmp_path, trials=1,
                       data={"train": str(tmp_path / "d.csv"), "test": str(tmp_path / "d.csv")})
    run_experiment(cfg)
    assert (tmp_path / "run" / "data" / "trial0_train.csv").read_text() == (tmp_path / "d.csv").read_text()


@pytest.mark.parametrize("n, pairs", [(2, 16), (4, 256), (8, 10_000), (16, 10_000)])
def test_verify_circuit(n, pairs):
    report = verify_circuit(n)
    assert report["pairs"] == pairs and report["passed"]
    assert report["max_deviation"] < (1e-12 if n <= 4 else 1e-10)


def test_verify_circuit_rejects_unsupported_n():
    with pytest.raises(ValueError):
        verify_circuit(32)


def write_model(path, phi_q, phi_c, N, M, kind="q"):
    payload = {"method": "svo", "model": {"N": N, "M": M, "hidden_response": kind,
                                          "output_response": "sigmoid"},
               "phi_q": phi_q, "phi_c": phi_c}
    path.write_text(json.dumps(payload))


def test_evaluate_memorized_sample(tmp_path):
    x = [1, -1, 1, 1]
    write_model(tmp_path / "m.json", [[5.0 * v for v in x]] * 3, [5.0] * 3, 4, 3)
    save_dataset(Dataset([x], [1]), tmp_path / "d.csv")
    assert evaluate(tmp_path / "m.json", tmp_path / "d.csv") == 1.0


def test_evaluate_chance_level_at_zero_phi(tmp_path):
    from hybridqc.bas import BasConfig, generate_dataset
    write_model(tmp_path / "m.json", np.zeros((32, 16)).tolist(), [0.0] * 32, 16, 32)
    accs = []
    for seed in range(5):
        _, test = generate_dataset(BasConfig(seed=seed))
        save_dataset(test, tmp_path / "d.csv")
        accs.append(evaluate(tmp_path / "m.json", tmp_path / "d.csv", seed=seed))
    assert all(abs(a - 0.5) <= 0.15 for a in accs)


def test_evaluate_mismatched_n(tmp_path):
    write_model(tmp_path / "m.json", [[0.0] * 4], [0.0], 4, 1)
    save_dataset(Dataset([[1] * 16], [1]), tmp_path / "d.csv")
    with pytest.raises(ValueError, match="length 16.*N=4"):
        evaluate(tmp_path / "m.json", tmp_path / "d.csv")


def test_evaluate_signflip_model(tmp_path):
    x = [1, 1, -1, -1]
    payload = {"method": "signflip", "threshold": 0.5,
               "model": {"N": 4, "M": 1, "hidden_response": "q", "output_response": "sigmoid"},
               "quantum_weights": [x]}
    (tmp_path / "m.json").write_text(json.dumps(payload))
    save_dataset(Dataset([x, [1, -1, 1, -1]], [1, -1]), tmp_path / "d.csv")
    assert evaluate(tmp_path / "m.json", tmp_path / "d.csv") == 1.0


# ------------------------------------------------------------------ CLI


def test_cli_generate_bas(tmp_path, capsys):
    assert main(["generate-bas", "--d", "4", "--n-train", "30", "--n-test", "30",
                 "--seed", "3", "--out", str(tmp_path)]) == 0
    lines = (tmp_path / "train.csv").read_text().splitlines()
    assert len(lines) == 31 and lines[0].endswith("x15,label")


def test_cli_train_and_evaluate(tmp_path, capsys):
    cfg = tmp_path / "c.yaml"
    cfg.write_text("trials: 1\nmodel:\n  M: 4\nsvo:\n  iterations: 20\nbas:\n  d: 2\n"
                   "  n_train: 6\n  n_test: 6\n")
    out = tmp_path / "run"
    assert main(["train", "--method", "svo", "--response", "l", "--config", str(cfg),
                 "--out", str(out)]) == 0
    meta = json.loads((out / "metadata.json").read_text())
    assert meta["config"]["model"]["hidden_response"] == "l"
    capsys.readouterr()
    assert main(["evaluate", "--model", str(out / "model_trial0.json"),
                 "--data", str(out / "data" / "trial0_test.csv"), "--k", "100"]) == 0
    assert capsys.readouterr().out.startswith("accuracy: ")


def test_cli_errors_exit_nonzero(tmp_path, capsys):
    cfg = tmp_path / "c.yaml"
    cfg.write_text("trials: 0\n")
    assert main(["train", "--config", str(cfg), "--out", str(tmp_path / "x")]) == 2
    assert "trials" in capsys.readouterr().err
    assert main(["evaluate", "--model", str(tmp_path / "missing.json"),
                 "--data", str(tmp_path / "missing.csv")]) == 2
    assert main(["verify-circuit", "--n", "3"]) == 2


def test_cli_verify_circuit(capsys):
    assert main(["verify-circuit", "--n", "4"]) == 0
    assert "PASS" in capsys.readouterr().out
