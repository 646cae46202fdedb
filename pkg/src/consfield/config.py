"""Declarative experiment configuration: an INI file of flat ``key = value`` sections.

Precedence: built-in defaults < per-experiment presets < config file <
``--override section.key=value`` < ``--seed`` / ``--out``.
"""
from __future__ import annotations

import configparser
from copy import deepcopy
from pathlib import Path
from typing import Iterable, Optional

from .autoencoder import TrainConfig
from .errors import ConfigError

KINDS = ("train", "curl-scan", "extract", "beta-sweep", "report", "gen-data")

DEFAULTS = {
    "experiment": {"kind": "train", "seed": "0", "out": "runs/out"},
    "data": {"kind": "spiral", "n": "1000", "sigma": "0.02", "path": "", "labels": "", "size": "8"},
    "model": {"hidden": "64", "activation": "relu", "tied": "false"},
    "train": {
        "epochs": "300",
        "batch_size": "32",
        "learning_rate": "0.01",
        "contraction": "0.0",
        "denoise_sigma": "0.0",
        "weight_length": "",
        "optimizer": "adam",
        "momentum": "0.9",
    },
    "probe": {"count": "256", "curl_grid": "24", "quiver_grid": "16", "box": "-1,1"},
    "extract": {"field": "spiral_sink", "grid": "32", "box": "-1,1", "domain": "box", "min_norm": "0.05"},
    "sweep": {
        "betas": "0.0,0.2,0.4,0.6,0.8,1.0",
        "samples": "4000",
        "pairs": "500",
        "corruption": "salt_pepper",
        "corruption_p": "0.25",
        "binomial_q": "0.5",
        "random_scale": "1.0",
        "conservative_epochs": "50",
        "conservative_lr": "0.001",
        "box": "0,1",
    },
    "report": {"params": "", "tol": "0.001", "tol_curl": "0.01"},
}

PRESETS = {
    "train": {
        "data": {"kind": "digits", "n": "1797"},
        "model": {"hidden": "64", "activation": "sigmoid", "tied": "false"},
        "train": {"epochs": "100", "learning_rate": "0.001", "weight_length": "1.0"},
    },
    "curl-scan": {},
    "extract": {
        "model": {"hidden": "200", "activation": "relu", "tied": "true"},
        "train": {"epochs": "300", "learning_rate": "0.001"},
    },
    "beta-sweep": {
        "data": {"kind": "digits", "n": "1797"},
        "model": {"hidden": "64", "activation": "sigmoid", "tied": "true"},
        "train": {"epochs": "50", "learning_rate": "0.001"},
    },
    "report": {},
    "gen-data": {},
}


class ExperimentConfig:
    """Nested ``section -> key -> str`` mapping with typed accessors."""

    def __init__(self, values: dict):
        self.values = values

    @classmethod
    def build(
        cls,
        kind: str,
        path: Optional[str] = None,
        overrides: Iterable[str] = (),
        seed: Optional[int] = None,
        out: Optional[str] = None,
    ) -> "ExperimentConfig":
        if kind not in KINDS:
            raise ConfigError(f"unknown experiment kind {kind!r}")
        values = deepcopy(DEFAULTS)
        for section, kv in PRESETS[kind].items():
            values[section].update(kv)
        values["experiment"]["kind"] = kind
        if path is not None:
            p = Path(path)
            if not p.is_file():
                raise ConfigError(f"config file not found: {path}")
            parser = configparser.ConfigParser()
            try:
                parser.read(p)
            except configparser.Error as exc:
                raise ConfigError(f"cannot parse {path}: {exc}") from exc
            for section in parser.sections():
                if section not in values:
                    raise ConfigError(f"{path}: unknown section [{section}]")
                for key, val in parser.items(section):
                    cls._set(values, section, key, val, where=str(path))
        for item in overrides:
            if "=" not in item or "." not in item.split("=", 1)[0]:
                raise ConfigError(f"override must look like section.key=value, got {item!r}")
            lhs, val = item.split("=", 1)
            section, key = lhs.strip().split(".", 1)
            cls._set(values, section, key, val.strip(), where="--override")
        if seed is not None:
            values["experiment"]["seed"] = str(seed)
        if out is not None:
            values["experiment"]["out"] = str(out)
        cfg = cls(values)
        cfg.train_config()
        return cfg

    @staticmethod
    def _set(values, section, key, val, where):
        if section not in values:
            raise ConfigError(f"{where}: unknown section [{section}]")
        if key not in values[section]:
            raise ConfigError(f"{where}: unknown key {section}.{key}")
        values[section][key] = val

    def get(self, section: str, key: str) -> str:
        return self.values[section][key]

    def get_int(self, section: str, key: str) -> int:
        try:
            return int(self.values[section][key])
        except ValueError as exc:
            raise ConfigError(f"{section}.{key} must be an integer") from exc

    def get_float(self, section: str, key: str) -> Optional[float]:
        raw = self.values[section][key].strip()
        if raw == "":
            return None
        try:
            return float(raw)
        except ValueError as exc:
            raise ConfigError(f"{section}.{key} must be a number") from exc

    def get_bool(self, section: str, key: str) -> bool:
        raw = self.values[section][key].strip().lower()
        if raw in ("1", "true", "yes", "on"):
            return True
        if raw in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"{section}.{key} must be a boolean")

    def get_floats(self, section: str, key: str) -> list[float]:
        try:
            return [float(v) for v in self.values[section][key].split(",") if v.strip()]
        except ValueError as exc:
            raise ConfigError(f"{section}.{key} must be a comma-separated list of numbers") from exc

    @property
    def kind(self) -> str:
        return self.get("experiment", "kind")

    @property
    def seed(self) -> int:
        return self.get_int("experiment", "seed")

    @property
    def out(self) -> Path:
        return Path(self.get("experiment", "out"))

    def train_config(self) -> TrainConfig:
        try:
            return TrainConfig(
                epochs=self.get_int("train", "epochs"),
                batch_size=self.get_int("train", "batch_size"),
                learning_rate=self.get_float("train", "learning_rate"),
                contraction=self.get_float("train", "contraction") or 0.0,
                denoise_sigma=self.get_float("train", "denoise_sigma") or 0.0,
                weight_length=self.get_float("train", "weight_length"),
                seed=self.seed,
                optimizer=self.get("train", "optimizer"),
                momentum=self.get_float("train", "momentum"),
                probe_count=self.get_int("probe", "count"),
                curl_grid=self.get_int("probe", "curl_grid"),
            )
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"invalid training configuration: {exc}") from exc

    def to_ini(self) -> str:
        lines = []
        for section, kv in self.values.items():
            lines.append(f"[{section}]")
            lines.extend(f"{k} = {v}" for k, v in kv.items())
            lines.append("")
        return "\n".join(lines)
