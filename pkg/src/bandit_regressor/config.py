"""Flat ``key=value`` run configuration files.

One setting per line, ``#`` starts a comment, blank lines are ignored. Keys
that are not given fall back to the stage 4 preset. Range endpoints accept a
trailing ``pi`` (``-5pi``) as shorthand for multiples of pi.
"""

from __future__ import annotations

import math
import re
from pathlib import Path

from .env import FeatureMode
from .harness import StageConfig, stage_preset
from .nn_core import ContractError
from .replay import PerConfig


class ConfigError(ContractError):
    pass


_NUMBER = re.compile(r"^[+-]?(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?$")
_PI_MULTIPLE = re.compile(r"^([+-]?)((\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?)?\*?pi$")


def _float(text: str) -> float:
    # float() would also accept "nan", "inf" and "1_000"
    s = text.strip()
    if _NUMBER.match(s):
        return float(s)
    m = _PI_MULTIPLE.match(s)
    if m:
        return float(m.group(1) + (m.group(2) or "1")) * math.pi
    raise ValueError(f"not a decimal number: {text!r}")


def _int(text: str) -> int:
    s = text.strip()
    if not re.fullmatch(r"[+-]?\d+", s):
        raise ValueError(f"not an integer: {text!r}")
    return int(s)


def _bool(text: str) -> bool:
    s = text.strip().lower()
    if s in ("true", "1", "yes", "on"):
        return True
    if s in ("false", "0", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _dims(text: str) -> tuple[int, ...]:
    parts = [p for p in text.replace(" ", "").split(",") if p]
    if not parts:
        raise ValueError("empty layer list")
    return tuple(_int(p) for p in parts)


def _mode(text: str) -> FeatureMode:
    return FeatureMode(text.strip().lower())


# key -> (parser, StageConfig field or "per.<field>" or range endpoint)
_KEYS = {
    "stage_id": (str.strip, "stage_id"),
    "train_lo": (_float, "train_range.0"),
    "train_hi": (_float, "train_range.1"),
    "eval_lo": (_float, "eval_range.0"),
    "eval_hi": (_float, "eval_range.1"),
    "n_samples": (_int, "n_samples"),
    "noise_std": (_float, "noise_std"),
    "featurizer": (_mode, "feature_mode"),
    "pe_dim": (_int, "pe_dim"),
    "actor_hidden": (_dims, "actor_hidden"),
    "critic_hidden": (_dims, "critic_hidden"),
    "actor_lr": (_float, "actor_lr"),
    "critic_lr": (_float, "critic_lr"),
    "batch_size": (_int, "batch_size"),
    "epochs": (_int, "epochs"),
    "sigma_reward": (_float, "sigma_reward"),
    "exploration_noise_std": (_float, "exploration_noise_std"),
    "per_enabled": (_bool, "per_enabled"),
    "per_alpha": (_float, "per.alpha"),
    "per_beta_start": (_float, "per.beta_start"),
    "per_beta_end": (_float, "per.beta_end"),
    "per_epsilon": (_float, "per.epsilon_priority"),
    "per_capacity": (_int, "per.capacity"),
    "is_weighted_critic": (_bool, "is_weighted_critic"),
    "updates_per_step": (_int, "updates_per_step"),
    "init_scheme": (str.strip, "init_scheme"),
    "eval_points": (_int, "eval_points"),
    "seed": (_int, "seed"),
}


def parse_config_text(text: str, source: str = "<config>") -> StageConfig:
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected key=value, got {raw.strip()!r}")
        key, _, val = (part.strip() for part in line.partition("="))
        if key not in _KEYS:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        parser, _ = _KEYS[key]
        try:
            values[key] = parser(val)
        except ValueError as exc:
            raise ConfigError(f"{source}:{lineno}: bad value for {key!r}: {exc}") from None
    return resolve(values)


def resolve(values: dict) -> StageConfig:
    """Overlay parsed ``values`` on the stage 4 preset."""
    base = stage_preset(4)
    fields = {}
    per_fields = {}
    train = list(base.train_range)
    evalr = list(base.eval_range)
    for key, val in values.items():
        target = _KEYS[key][1]
        if target.startswith("per."):
            per_fields[target[4:]] = val
        elif target.startswith("train_range."):
            train[int(target[-1])] = val
        elif target.startswith("eval_range."):
            evalr[int(target[-1])] = val
        else:
            fields[target] = val
    fields.setdefault("stage_id", "custom" if values else base.stage_id)
    try:
        per = PerConfig(**{**_per_dict(base.per), **per_fields})
        return base.replace(train_range=tuple(train), eval_range=tuple(evalr), per=per, **fields)
    except ContractError as exc:
        raise ConfigError(str(exc)) from None


def _per_dict(per: PerConfig) -> dict:
    return {
        "alpha": per.alpha,
        "beta_start": per.beta_start,
        "beta_end": per.beta_end,
        "epsilon_priority": per.epsilon_priority,
        "capacity": per.capacity,
    }


def parse_config(path: str | Path) -> StageConfig:
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {p}: {exc.strerror}") from None
    return parse_config_text(text, str(p))


def config_items(cfg: StageConfig) -> list[tuple[str, str]]:
    """The fully resolved config as ordered (key, text) pairs."""
    out = []
    for key, (_, target) in _KEYS.items():
        if target.startswith("per."):
            val = getattr(cfg.per, target[4:])
        elif "." in target:
            name, i = target.split(".")
            val = getattr(cfg, name)[int(i)]
        else:
            val = getattr(cfg, target)
        if isinstance(val, bool):
            text = "true" if val else "false"
        elif isinstance(val, float):
            text = repr(val)
        elif isinstance(val, tuple):
            text = ",".join(str(v) for v in val)
        elif isinstance(val, FeatureMode):
            text = val.value
        else:
            text = str(val)
        out.append((key, text))
    return out


def dump_config(cfg: StageConfig) -> str:
    return "".join(f"{k}={v}\n" for k, v in config_items(cfg))
