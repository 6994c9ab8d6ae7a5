"""Pipeline configuration: INI file with sections, every key overridable by flag.

Keys are unique across sections so that ``--window_days 30`` needs no section
prefix. Unknown sections or keys are rejected.
"""

from __future__ import annotations

import configparser
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Mapping

from .errors import ConfigError
from .exposure import ExposureMode, PprParams, WeightMode
from .features import TimeOfDayMode
from .model import ClassWeighting, TrainParams
from .synth import DEFAULT_CHANNELS, DEFAULT_FRAUD_CHANNELS, InvalidConfig, SynthConfig

MODES = ("baseline", "with_ppr", "both")


def _channel_list(text: str) -> tuple[tuple[str, float], ...]:
    """Parse ``NAME:prob,NAME:prob``."""
    out = []
    for part in text.split(","):
        name, sep, prob = part.strip().partition(":")
        if not sep or not name:
            raise ValueError(f"expected NAME:probability, got {part!r}")
        out.append((name.strip(), float(prob)))
    return tuple(out)


def _choice(*allowed: str) -> Callable[[str], str]:
    def parse(text: str) -> str:
        if text not in allowed:
            raise ValueError(f"expected one of {', '.join(allowed)}")
        return text

    return parse


def _optional_path(text: str) -> str | None:
    return text or None


# key -> (section, parser, default)
SCHEMA: dict[str, tuple[str, Callable[[str], Any], Any]] = {
    "seed": ("pipeline", int, 42),
    "mode": ("pipeline", _choice(*MODES), "both"),
    "out_dir": ("pipeline", str, "out"),
    "ledger": ("input", _optional_path, None),
    "status": ("input", str, "Initiated"),
    "n_accounts": ("synth", int, 5000),
    "n_transactions": ("synth", int, 100_000),
    "span_days": ("synth", int, 365),
    "fraud_rate": ("synth", float, 0.005),
    "n_rings": ("synth", int, 20),
    "ring_size": ("synth", int, 4),
    "initiated_fraction": ("synth", float, 0.47),
    "channels": ("synth", _channel_list, DEFAULT_CHANNELS),
    "fraud_channels": ("synth", _channel_list, DEFAULT_FRAUD_CHANNELS),
    "amount_mu": ("synth", float, 4.0),
    "amount_sigma": ("synth", float, 1.0),
    "history_days": ("split", int, 14),
    "train_fraction": ("split", float, 0.7),
    "window_days": ("features", int, 45),
    "time_of_day_mode": ("features", _choice(*(m.value for m in TimeOfDayMode)), "amount_ratio"),
    "exposure_mode": ("features", _choice(*(m.value for m in ExposureMode)), "sum"),
    "alpha": ("ppr", float, 0.85),
    "tol": ("ppr", float, 1e-9),
    "max_iter": ("ppr", int, 1000),
    "weight_mode": ("ppr", _choice(*(m.value for m in WeightMode)), "count"),
    "learning_rate": ("train", float, 0.1),
    "l2_lambda": ("train", float, 1e-6),
    "max_epochs": ("train", int, 500),
    "loss_tol": ("train", float, 1e-10),
    "class_weighting": ("train", _choice(*(m.value for m in ClassWeighting)), "none"),
    "psi_bins": ("evaluate", int, 10),
    "threshold": ("evaluate", float, 0.5),
}


@dataclass(frozen=True)
class PipelineConfig:
    seed: int
    mode: str
    out_dir: Path
    ledger: Path | None
    status: str
    synth: SynthConfig
    history_days: int
    train_fraction: float
    window_days: int
    time_of_day_mode: str
    exposure_mode: str
    ppr: PprParams
    train: TrainParams
    psi_bins: int
    threshold: float

    @property
    def models(self) -> list[str]:
        return {"baseline": ["LR_base"], "with_ppr": ["LR_ppr"], "both": ["LR_base", "LR_ppr"]}[self.mode]

    @property
    def include_ppr(self) -> bool:
        return self.mode != "baseline"


def _from_values(values: Mapping[str, Any], base_dir: Path) -> PipelineConfig:
    v = values

    def rel(p) -> Path:
        path = Path(p)
        return Path(os.path.normpath(path if path.is_absolute() else base_dir / path))

    try:
        synth = SynthConfig(
            seed=v["seed"],
            n_accounts=v["n_accounts"],
            n_transactions=v["n_transactions"],
            span_days=v["span_days"],
            fraud_rate=v["fraud_rate"],
            n_rings=v["n_rings"],
            ring_size=v["ring_size"],
            initiated_fraction=v["initiated_fraction"],
            channels=v["channels"],
            fraud_channels=v["fraud_channels"],
            amount_lognormal=(v["amount_mu"], v["amount_sigma"]),
        )
        synth.validate()
        ppr = PprParams(v["alpha"], v["tol"], v["max_iter"], v["weight_mode"])
        train = TrainParams(v["learning_rate"], v["l2_lambda"], v["max_epochs"], v["loss_tol"], v["class_weighting"])
    except (InvalidConfig, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    if v["history_days"] < 0:
        raise ConfigError("history_days must be >= 0")
    if not 0.0 < v["train_fraction"] < 1.0:
        raise ConfigError("train_fraction must lie in (0, 1)")
    if v["window_days"] < 1:
        raise ConfigError("window_days must be >= 1")
    if v["psi_bins"] < 1:
        raise ConfigError("psi_bins must be >= 1")
    return PipelineConfig(
        seed=v["seed"],
        mode=v["mode"],
        out_dir=rel(v["out_dir"]),
        ledger=None if v["ledger"] is None else rel(v["ledger"]),
        status=v["status"],
        synth=synth,
        history_days=v["history_days"],
        train_fraction=v["train_fraction"],
        window_days=v["window_days"],
        time_of_day_mode=v["time_of_day_mode"],
        exposure_mode=v["exposure_mode"],
        ppr=ppr,
        train=train,
        psi_bins=v["psi_bins"],
        threshold=v["threshold"],
    )


def _parse(key: str, text: str) -> Any:
    try:
        return SCHEMA[key][1](text.strip())
    except ValueError as exc:
        raise ConfigError(f"{key}: {exc}") from None


def load_config(path: str | Path | None = None, overrides: Mapping[str, str] | None = None) -> PipelineConfig:
    """Read defaults, then the INI file (if any), then string overrides.

    Relative paths resolve against the config file's directory, or the current
    directory when no file is given.
    """
    values = {k: default for k, (_, _, default) in SCHEMA.items()}
    base_dir = Path.cwd()
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        parser = configparser.ConfigParser(interpolation=None)
        try:
            parser.read(path)
        except configparser.Error as exc:
            raise ConfigError(str(exc)) from None
        base_dir = path.resolve().parent
        for section in parser.sections():
            for key, text in parser.items(section):
                if key not in SCHEMA:
                    raise ConfigError(f"unknown key {key!r} in [{section}]")
                if SCHEMA[key][0] != section:
                    raise ConfigError(f"key {key!r} belongs in [{SCHEMA[key][0]}], not [{section}]")
                values[key] = _parse(key, text)
    for key, text in (overrides or {}).items():
        if key not in SCHEMA:
            raise ConfigError(f"unknown key {key!r}")
        values[key] = _parse(key, text)
    return _from_values(values, base_dir)
