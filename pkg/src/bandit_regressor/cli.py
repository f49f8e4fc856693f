"""Command-line entry point: ``bandit-regressor {train,eval,sweep,plot}``.

Exit codes: 0 success, 2 usage or configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import logging
import os
import statistics
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .config import ConfigError, parse_config
from .harness import (
    EVAL_POINTS,
    StageConfig,
    evaluate,
    make_grid,
    run_stage,
    save_run,
    stage_preset,
    write_predictions,
)
from .env import RewardKernel
from .nn_core import ContractError, MlpParams, MlpSpec, NonFiniteError, OutputActivation, forward

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 2, 3
OUT_ENV = "BANDIT_REGRESSOR_OUT"

log = logging.getLogger("bandit_regressor")


class UsageError(Exception):
    pass


def _default_out(name: str) -> Path:
    return Path(os.environ.get(OUT_ENV, "runs")) / name


def _resolve_config(args) -> StageConfig:
    if args.config is not None:
        cfg = parse_config(args.config)
    else:
        cfg = stage_preset(args.stage)
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.epochs is not None:
        changes["epochs"] = args.epochs
    try:
        return cfg.replace(**changes) if changes else cfg
    except ContractError as exc:
        raise ConfigError(str(exc)) from None


def _run_name(cfg: StageConfig) -> str:
    return f"stage{cfg.stage_id}_seed{cfg.seed}"


def cmd_train(args) -> int:
    cfg = _resolve_config(args)
    out = Path(args.out) if args.out else _default_out(_run_name(cfg))
    result = run_stage(cfg)
    save_run(result, out)
    print(f"final eval MSE {result.final_eval_mse:.6f}")
    print(f"wall clock {result.wall_clock_s:.2f} s")
    print(f"artifacts in {out}")
    return EXIT_OK


def _sweep_one(cfg: StageConfig, out: str) -> tuple[int, float, float]:
    result = run_stage(cfg)
    save_run(result, out)
    return cfg.seed, result.final_eval_mse, result.wall_clock_s


def cmd_sweep(args) -> int:
    if args.seeds < 1:
        raise UsageError("--seeds must be >= 1")
    base = _resolve_config(args)
    root = Path(args.out) if args.out else _default_out(f"stage{base.stage_id}_sweep")
    first = args.seed if args.seed is not None else 0
    configs = [base.replace(seed=first + i) for i in range(args.seeds)]
    jobs = [(c, str(root / f"seed_{c.seed}")) for c in configs]
    if args.workers > 1:
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            rows = list(pool.map(_sweep_one, *zip(*jobs)))
    else:
        rows = [_sweep_one(c, o) for c, o in jobs]
    root.mkdir(parents=True, exist_ok=True)
    with open(root / "summary.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["seed", "final_eval_mse", "wall_clock_s"])
        for seed, mse, secs in rows:
            w.writerow([seed, repr(mse), f"{secs:.3f}"])
    med = statistics.median(r[1] for r in rows)
    print(f"median final eval MSE over {len(rows)} seeds: {med:.6f}")
    print(f"summary in {root / 'summary.csv'}")
    return EXIT_OK


def _load_actor(run: Path, cfg: StageConfig) -> MlpParams:
    path = run / "actor.npz"
    if not path.exists():
        raise UsageError(f"{path} not found")
    spec = MlpSpec(cfg.featurizer.dim, cfg.actor_hidden, 1, OutputActivation.TANH)
    with np.load(path) as data:
        arrays = [data[f"a{i}"] for i in range(2 * spec.depth)]
    params = MlpParams(arrays[0::2], arrays[1::2])
    forward(spec, params, np.zeros((1, spec.input_dim)))  # shape check
    return params


def cmd_eval(args) -> int:
    run = Path(args.run)
    cfg_path = run / "config.txt"
    if not cfg_path.exists():
        raise UsageError(f"{cfg_path} not found")
    cfg = parse_config(cfg_path)
    spec = MlpSpec(cfg.featurizer.dim, cfg.actor_hidden, 1, OutputActivation.TANH)
    params = _load_actor(run, cfg)
    lo = args.lo if args.lo is not None else cfg.eval_range[0]
    hi = args.hi if args.hi is not None else cfg.eval_range[1]
    grid = make_grid(lo, hi, args.points)

    def predict(states):
        return forward(spec, params, states)[0][:, 0]

    table = evaluate(predict, cfg.featurizer, grid, RewardKernel(cfg.sigma_reward))
    print(f"eval MSE on [{lo:.6g}, {hi:.6g}] ({len(table)} points): {table.mse:.6f}")
    print(f"max abs error: {float(table.abs_err.max()):.6f}")
    if args.output:
        write_predictions(Path(args.output), table)
    return EXIT_OK


def cmd_plot(args) -> int:
    from .svgplot import plot_run

    run = Path(args.run)
    for name in ("predictions.csv", "metrics.csv"):
        if not (run / name).exists():
            raise UsageError(f"{run / name} not found")
    shade = None
    if (run / "config.txt").exists():
        shade = parse_config(run / "config.txt").train_range
    for p in plot_run(run, shade):
        print(p)
    return EXIT_OK


def _stage(text: str) -> int:
    if text not in ("1", "2", "3", "4"):
        raise argparse.ArgumentTypeError(f"invalid stage {text!r} (choose from 1, 2, 3, 4)")
    return int(text)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bandit-regressor",
        description="Regression as a contextual bandit: actor-critic on a noisy sine.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="log training progress")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_run_args(p):
        src = p.add_mutually_exclusive_group(required=True)
        src.add_argument("--stage", type=_stage, help="built-in stage preset (1-4)")
        src.add_argument("--config", type=Path, help="flat key=value config file")
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--epochs", type=int, help="override the number of epochs")
        p.add_argument("--out", help=f"output directory (default: ${OUT_ENV} or ./runs)")

    p = sub.add_parser("train", help="run one stage and write its artifacts")
    add_run_args(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("sweep", help="run several seeds and write summary.csv")
    add_run_args(p)
    p.add_argument("--seeds", type=int, required=True, help="number of seeds (starting at --seed, default 0)")
    p.add_argument("--workers", type=int, default=1, help="parallel worker processes")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("eval", help="re-evaluate a saved run's final actor")
    p.add_argument("--run", required=True, help="run directory written by train")
    p.add_argument("--lo", type=float)
    p.add_argument("--hi", type=float)
    p.add_argument("--points", type=int, default=EVAL_POINTS)
    p.add_argument("--output", help="write the evaluation table to this CSV")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("plot", help="write prediction/error/loss SVGs for a run")
    p.add_argument("--run", required=True)
    p.set_defaults(func=cmd_plot)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except (UsageError, ConfigError, ContractError) as exc:
        print(f"{parser.prog}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NonFiniteError as exc:
        print(f"{parser.prog}: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
