"""Command-line entry point: ``hybridqc <subcommand> ...``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .bas import BasConfig, DatasetFormatError, generate_dataset, positive_overlap, save_dataset
from .harness import ConfigError, evaluate, load_config, run_experiment, verify_circuit
from .response import ResponseKind


def _cmd_generate_bas(args) -> int:
    cfg = BasConfig(d=args.d, n_train=args.n_train, n_test=args.n_test, seed=args.seed)
    train, test = generate_dataset(cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_dataset(train, out / "train.csv")
    save_dataset(test, out / "test.csv")
    print(f"wrote {len(train)} training and {len(test)} test samples to {out} "
          f"(positive overlap: {positive_overlap(train, test)})")
    return 0


def _cmd_train(args) -> int:
    cfg = load_config(
        args.config,
        method=args.method,
        response=args.response,
        trials=args.trials,
        seed=args.seed,
        iterations=args.iterations,
        output_dir=args.out,
    )
    summary = run_experiment(cfg, jobs=args.jobs)
    print(json.dumps(summary, indent=2))
    return 0


def _cmd_evaluate(args) -> int:
    acc = evaluate(args.model, args.data, K=args.k, seed=args.seed)
    print(f"accuracy: {acc:.4f}")
    return 0


def _cmd_verify_circuit(args) -> int:
    report = verify_circuit(args.n)
    status = "PASS" if report["passed"] else "FAIL"
    print(f"N={report['N']} pairs={report['pairs']} "
          f"max_deviation={report['max_deviation']:.3e} {status}")
    return 0 if report["passed"] else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hybridqc", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate-bas", help="write a Bars-and-Stripes train/test split")
    p.add_argument("--d", type=int, default=4)
    p.add_argument("--n-train", type=int, default=30)
    p.add_argument("--n-test", type=int, default=30)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_generate_bas)

    p = sub.add_parser("train", help="run a multi-trial training experiment")
    p.add_argument("--method", choices=["svo", "signflip"])
    p.add_argument("--response", choices=[k.value for k in ResponseKind])
    p.add_argument("--config", help="YAML experiment config")
    p.add_argument("--out", help="output directory")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--iterations", type=int)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("evaluate", help="accuracy of a saved model on a dataset file")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--k", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("verify-circuit", help="check the circuit simulation against (dot/N)^2")
    p.add_argument("--n", type=int, default=4)
    p.set_defaults(func=_cmd_verify_circuit)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, DatasetFormatError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
