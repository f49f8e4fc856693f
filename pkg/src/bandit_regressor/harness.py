"""Stage presets, the training loop, evaluation and run artifacts."""

from __future__ import annotations

import csv
import dataclasses
import logging
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .agent import ActorCritic
from .env import FeatureMode, Featurizer, RewardKernel, featurize, sample_dataset
from .nn_core import INIT_SCHEMES, ContractError, NonFiniteError
from .replay import PerConfig, ReplayBuffer

log = logging.getLogger(__name__)

METRIC_COLUMNS = ("epoch", "critic_loss", "actor_loss", "mean_reward", "train_mse", "eval_mse")
PREDICTION_COLUMNS = ("x", "y_true", "y_pred", "abs_err", "reward")
EVAL_POINTS = 1201
PI = math.pi


class TrainingDiverged(NonFiniteError):
    pass


@dataclass(frozen=True)
class StageConfig:
    stage_id: str = "4"
    train_range: tuple[float, float] = (-5 * PI, 5 * PI)
    eval_range: tuple[float, float] = (-6 * PI, 6 * PI)
    n_samples: int = 1000
    noise_std: float = 0.1
    feature_mode: FeatureMode = FeatureMode.PE
    pe_dim: int = 16
    actor_hidden: tuple[int, ...] = (256, 128, 64)
    critic_hidden: tuple[int, ...] = (256, 128, 64)
    actor_lr: float = 1e-4
    critic_lr: float = 1e-3
    batch_size: int = 64
    epochs: int = 500
    sigma_reward: float = 0.2
    exploration_noise_std: float = 0.1
    per_enabled: bool = True
    per: PerConfig = field(default_factory=PerConfig)
    is_weighted_critic: bool = True
    updates_per_step: int = 1
    init_scheme: str = "fan_in_uniform"
    eval_points: int = EVAL_POINTS
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "feature_mode", FeatureMode(self.feature_mode))
        object.__setattr__(self, "train_range", tuple(float(v) for v in self.train_range))
        object.__setattr__(self, "eval_range", tuple(float(v) for v in self.eval_range))
        object.__setattr__(self, "actor_hidden", tuple(int(v) for v in self.actor_hidden))
        object.__setattr__(self, "critic_hidden", tuple(int(v) for v in self.critic_hidden))
        problems = []
        if not self.train_range[0] < self.train_range[1]:
            problems.append("train_range must be increasing")
        if not self.eval_range[0] < self.eval_range[1]:
            problems.append("eval_range must be increasing")
        for name in ("n_samples", "batch_size", "updates_per_step"):
            if getattr(self, name) < 1:
                problems.append(f"{name} must be >= 1")
        if self.epochs < 0:
            problems.append("epochs must be >= 0")
        if self.eval_points < 2:
            problems.append("eval_points must be >= 2")
        if not (self.actor_hidden and self.critic_hidden) or min(self.actor_hidden + self.critic_hidden) < 1:
            problems.append("hidden layer lists must be non-empty positive widths")
        for name in ("actor_lr", "critic_lr", "sigma_reward"):
            if not getattr(self, name) > 0:
                problems.append(f"{name} must be positive")
        if self.noise_std < 0 or self.exploration_noise_std < 0:
            problems.append("noise levels must be non-negative")
        if self.feature_mode is FeatureMode.PE and (self.pe_dim < 2 or self.pe_dim % 2):
            problems.append("pe_dim must be an even integer >= 2")
        if self.init_scheme not in INIT_SCHEMES:
            problems.append(f"init_scheme must be one of {INIT_SCHEMES}")
        if problems:
            raise ContractError("; ".join(problems))

    @property
    def featurizer(self) -> Featurizer:
        return Featurizer(self.feature_mode, self.pe_dim)

    @property
    def steps_per_epoch(self) -> int:
        return math.ceil(self.n_samples / self.batch_size)

    def replace(self, **changes) -> "StageConfig":
        return dataclasses.replace(self, **changes)


_SHARED = dict(
    n_samples=1000,
    batch_size=64,
    epochs=500,
    actor_lr=1e-4,
    critic_lr=1e-3,
    sigma_reward=0.2,
    exploration_noise_std=0.1,
)

_PRESETS = {
    1: dict(
        train_range=(-PI, PI), eval_range=(-2 * PI, 2 * PI),
        actor_hidden=(128, 64), critic_hidden=(128, 64),
        per_enabled=False, feature_mode=FeatureMode.RAW,
    ),
    2: dict(
        train_range=(-5 * PI, 5 * PI), eval_range=(-6 * PI, 6 * PI),
        actor_hidden=(128, 64), critic_hidden=(128, 64),
        per_enabled=True, feature_mode=FeatureMode.RAW,
    ),
    3: dict(
        train_range=(-5 * PI, 5 * PI), eval_range=(-6 * PI, 6 * PI),
        actor_hidden=(256, 128, 64), critic_hidden=(256, 128, 64),
        per_enabled=True, feature_mode=FeatureMode.RAW,
    ),
    4: dict(
        train_range=(-5 * PI, 5 * PI), eval_range=(-6 * PI, 6 * PI),
        actor_hidden=(256, 128, 64), critic_hidden=(256, 128, 64),
        per_enabled=True, feature_mode=FeatureMode.PE, pe_dim=16,
    ),
}


def stage_preset(stage_id: int, seed: int = 0) -> StageConfig:
    try:
        preset = _PRESETS[int(stage_id)]
    except (KeyError, ValueError):
        raise ContractError(f"unknown stage {stage_id!r}; expected 1, 2, 3 or 4") from None
    return StageConfig(stage_id=str(int(stage_id)), seed=seed, **_SHARED, **preset)


def make_grid(lo: float, hi: float, points: int) -> np.ndarray:
    if points < 2:
        raise ContractError("a grid needs at least 2 points")
    if not lo < hi:
        raise ContractError(f"grid bounds must satisfy lo < hi, got {lo}, {hi}")
    return np.linspace(lo, hi, points)


def beta_schedule(per: PerConfig, epoch: int, epochs: int) -> float:
    """Linear anneal from beta_start at epoch 0 to beta_end at the last epoch."""
    if epochs <= 1:
        return per.beta_end if epochs == 1 else per.beta_start
    frac = epoch / (epochs - 1)
    return per.beta_start + frac * (per.beta_end - per.beta_start)


@dataclass
class EvalTable:
    x: np.ndarray
    y_true: np.ndarray
    y_pred: np.ndarray
    abs_err: np.ndarray
    reward: np.ndarray

    def __len__(self) -> int:
        return len(self.x)

    @property
    def mse(self) -> float:
        return float(np.mean((self.y_pred - self.y_true) ** 2))

    def mse_between(self, lo: float, hi: float) -> float:
        mask = (self.x >= lo) & (self.x <= hi)
        if not mask.any():
            raise ContractError(f"no grid points in [{lo}, {hi}]")
        return float(np.mean(self.abs_err[mask] ** 2))

    def rows(self):
        return zip(self.x, self.y_true, self.y_pred, self.abs_err, self.reward)


def evaluate(predict, featurizer: Featurizer, grid, kernel: RewardKernel | None = None) -> EvalTable:
    """Score a predictor against noiseless sin(x) on ``grid``.

    ``predict`` is an :class:`ActorCritic` or any callable mapping a batch of
    feature vectors to predictions.
    """
    x = np.asarray(grid, dtype=np.float64)
    if x.ndim != 1 or x.size == 0:
        raise ContractError("grid must be a non-empty 1-d sequence")
    kernel = kernel or RewardKernel()
    fn = predict.act if isinstance(predict, ActorCritic) else predict
    y_pred = np.asarray(fn(featurize(featurizer, x)), dtype=np.float64).reshape(-1)
    y_true = np.sin(x)
    return EvalTable(x, y_true, y_pred, np.abs(y_pred - y_true), np.asarray(kernel(y_pred, y_true)))


@dataclass
class RunArtifacts:
    config: StageConfig
    metrics: list[dict]
    evaluation: EvalTable
    wall_clock_s: float
    agent: ActorCritic | None = None

    @property
    def final_eval_mse(self) -> float:
        return self.evaluation.mse


def run_stage(config: StageConfig) -> RunArtifacts:
    """Train one agent under ``config`` and evaluate it on the config's eval grid.

    The config seed determines the dataset, both network initializations,
    shuffling, exploration noise and replay sampling.
    """
    t0 = time.perf_counter()
    data_seed, agent_seed, loop_seed = np.random.SeedSequence(config.seed).spawn(3)
    data = sample_dataset(*config.train_range, config.n_samples, config.noise_std, np.random.default_rng(data_seed))
    feat = config.featurizer
    kernel = RewardKernel(config.sigma_reward)
    agent = ActorCritic(
        feat.dim,
        config.actor_hidden,
        config.critic_hidden,
        actor_lr=config.actor_lr,
        critic_lr=config.critic_lr,
        exploration_noise_std=config.exploration_noise_std,
        seed=agent_seed,
        init_scheme=config.init_scheme,
    )
    buffer = ReplayBuffer(feat.dim, config.per)
    rng = np.random.default_rng(loop_seed)
    grid = make_grid(*config.eval_range, config.eval_points)
    train_states = featurize(feat, data.xs)

    metrics = []
    for epoch in range(config.epochs):
        beta = beta_schedule(config.per, epoch, config.epochs)
        order = rng.permutation(len(data))
        c_loss = a_loss = reward = 0.0
        for start in range(0, len(data), config.batch_size):
            mb = order[start : start + config.batch_size]
            rep = agent.train_step(
                buffer, kernel, data.xs[mb], data.ys[mb], feat,
                per_enabled=config.per_enabled, beta=beta, rng=rng,
                batch_size=config.batch_size,
                is_weighted_critic=config.is_weighted_critic,
                updates=config.updates_per_step,
            )
            c_loss += rep.critic_loss
            a_loss += rep.actor_loss
            reward += rep.mean_batch_reward * len(mb)
        steps = config.steps_per_epoch
        row = {
            "epoch": epoch,
            "critic_loss": c_loss / steps,
            "actor_loss": a_loss / steps,
            "mean_reward": reward / len(data),
            "train_mse": float(np.mean((agent.act(train_states) - data.ys) ** 2)),
            "eval_mse": evaluate(agent, feat, grid, kernel).mse,
        }
        if not all(math.isfinite(v) for v in row.values()):
            raise TrainingDiverged(f"non-finite metrics at epoch {epoch}: {row}")
        metrics.append(row)
        if epoch % 50 == 0 or epoch == config.epochs - 1:
            log.info("stage %s seed %d epoch %d eval_mse %.4f", config.stage_id, config.seed, epoch, row["eval_mse"])

    table = evaluate(agent, feat, grid, kernel)
    return RunArtifacts(config, metrics, table, time.perf_counter() - t0, agent)


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_metrics(path: Path, metrics: list[dict]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(METRIC_COLUMNS)
        for row in metrics:
            w.writerow([_fmt(row[c]) for c in METRIC_COLUMNS])


def write_predictions(path: Path, table: EvalTable) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(PREDICTION_COLUMNS)
        for row in table.rows():
            w.writerow([_fmt(float(v)) for v in row])


def read_csv_columns(path: Path) -> dict[str, np.ndarray]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [[float(v) for v in r] for r in reader if r]
    arr = np.array(rows, dtype=np.float64).reshape(len(rows), len(header))
    return {name: arr[:, i] for i, name in enumerate(header)}


def read_predictions(path: Path) -> EvalTable:
    cols = read_csv_columns(path)
    return EvalTable(*(cols[c] for c in PREDICTION_COLUMNS))


def save_run(artifacts: RunArtifacts, out_dir: str | Path) -> Path:
    """Write metrics.csv, predictions.csv, config.txt and the final actor weights."""
    from .config import dump_config  # local import: config depends on this module

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_metrics(out / "metrics.csv", artifacts.metrics)
    write_predictions(out / "predictions.csv", artifacts.evaluation)
    (out / "config.txt").write_text(dump_config(artifacts.config), encoding="utf-8")
    if artifacts.agent is not None:
        arrays = artifacts.agent.actor.arrays()
        np.savez(out / "actor.npz", **{f"a{i}": a for i, a in enumerate(arrays)})
    return out
