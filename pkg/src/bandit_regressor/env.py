"""Noisy-sine data, state featurization and the Gaussian-kernel reward."""

from __future__ import annotations

import csv
import enum
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .nn_core import ContractError


@dataclass(frozen=True, eq=False)
class Dataset:
    xs: np.ndarray
    ys: np.ndarray
    range_lo: float
    range_hi: float
    noise_std: float
    seed: int | None = None

    def __len__(self) -> int:
        return len(self.xs)

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["x", "y"])
            for x, y in zip(self.xs, self.ys):
                w.writerow([repr(float(x)), repr(float(y))])

    @classmethod
    def from_csv(cls, path: str | Path, noise_std: float = float("nan")) -> "Dataset":
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames != ["x", "y"]:
                raise ContractError(f"{path}: expected header 'x,y', got {reader.fieldnames}")
            rows = [(float(r["x"]), float(r["y"])) for r in reader]
        if not rows:
            raise ContractError(f"{path}: no data rows")
        xs = np.array([r[0] for r in rows])
        ys = np.array([r[1] for r in rows])
        return cls(xs, ys, float(xs.min()), float(xs.max()), noise_std)


def sample_dataset(
    range_lo: float, range_hi: float, n: int, noise_std: float = 0.1, seed: int | None = 0
) -> Dataset:
    """Draw ``n`` points x ~ U[lo, hi] with targets sin(x) + N(0, noise_std^2)."""
    if n < 1:
        raise ContractError("n must be positive")
    if not range_lo < range_hi:
        raise ContractError(f"empty range [{range_lo}, {range_hi}]")
    if noise_std < 0:
        raise ContractError("noise_std must be non-negative")
    rng = np.random.default_rng(seed)
    xs = rng.uniform(range_lo, range_hi, size=n)
    ys = np.sin(xs)
    if noise_std > 0:
        ys = ys + rng.normal(0.0, noise_std, size=n)
    return Dataset(xs, ys, float(range_lo), float(range_hi), float(noise_std), seed)


def positional_encode(x, pe_dim: int) -> np.ndarray:
    """Sin/cos features at frequencies 1, 2, 4, ...

    Column ``2k`` is ``sin(2**k * x)`` and column ``2k + 1`` is ``cos(2**k * x)``.
    Accepts a scalar (returns shape ``(pe_dim,)``) or an array (appends a
    trailing axis of length ``pe_dim``).
    """
    if pe_dim < 2 or pe_dim % 2:
        raise ContractError(f"pe_dim must be an even integer >= 2, got {pe_dim}")
    x = np.asarray(x, dtype=np.float64)
    freqs = 2.0 ** np.arange(pe_dim // 2)
    angles = x[..., None] * freqs
    out = np.empty(x.shape + (pe_dim,))
    out[..., 0::2] = np.sin(angles)
    out[..., 1::2] = np.cos(angles)
    return out


class FeatureMode(str, enum.Enum):
    RAW = "raw"
    PE = "pe"


@dataclass(frozen=True)
class Featurizer:
    mode: FeatureMode = FeatureMode.RAW
    pe_dim: int = 16

    def __post_init__(self):
        object.__setattr__(self, "mode", FeatureMode(self.mode))
        if self.mode is FeatureMode.PE and (self.pe_dim < 2 or self.pe_dim % 2):
            raise ContractError(f"pe_dim must be an even integer >= 2, got {self.pe_dim}")

    @property
    def dim(self) -> int:
        return self.pe_dim if self.mode is FeatureMode.PE else 1

    def __call__(self, x) -> np.ndarray:
        return featurize(self, x)


def featurize(f: Featurizer, x) -> np.ndarray:
    """State vector(s) for ``x``: shape ``(dim,)`` for a scalar, ``(n, dim)`` for a 1-d array."""
    if f.mode is FeatureMode.PE:
        return positional_encode(x, f.pe_dim)
    return np.asarray(x, dtype=np.float64)[..., None]


_TINY = np.nextafter(0.0, 1.0)


@dataclass(frozen=True)
class RewardKernel:
    sigma: float = 0.2

    def __post_init__(self):
        if not self.sigma > 0:
            raise ContractError(f"sigma must be positive, got {self.sigma}")

    def __call__(self, y_hat, y):
        return gaussian_reward(self, y_hat, y)


def gaussian_reward(k: RewardKernel, y_hat, y):
    """exp(-(y - y_hat)^2 / (2 sigma^2)); works elementwise on arrays."""
    err = np.asarray(y, dtype=np.float64) - np.asarray(y_hat, dtype=np.float64)
    # floor keeps R > 0 where exp underflows for very large errors
    r = np.maximum(np.exp(-(err * err) / (2.0 * k.sigma**2)), _TINY)
    return float(r) if r.ndim == 0 else r
