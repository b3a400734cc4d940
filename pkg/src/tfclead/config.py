"""Run configuration: an INI file with sections, overridden by CLI flags.

Recognised sections and keys (all optional)::

    [paths]       data, models, reports
    [generator]   any GeneratorConfig field; vocab sizes as vocab_<group>
    [pipeline]    features, derivative, classes, split_seed, strict
    [hyperparams] any Hyperparams field
    [tune]        grid, folds
    [drift]       magnitude
"""
from __future__ import annotations

import configparser
import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError
from .features import FeatureSet
from .gbdt import Hyperparams
from .synthgen import DEFAULT_VOCAB, GeneratorConfig

DERIVATIVE_CHOICES = ("all", "ice", "bev")


@dataclass
class RunConfig:
    data: str = "runs/fleet.csv"
    models: str = "runs/models"
    reports: str = "runs/reports"
    generator: GeneratorConfig = field(default_factory=GeneratorConfig)
    features: str = FeatureSet.UNLIMITED.value
    derivative: str = "all"
    classes: int = 2
    split_seed: int = 42
    strict: bool = False
    hyperparams: Hyperparams = field(default_factory=Hyperparams)
    grid: str = "desk"
    folds: int = 5
    magnitude: float = 3.0

    def validate(self) -> "RunConfig":
        FeatureSet.parse(self.features)
        if self.derivative not in DERIVATIVE_CHOICES:
            raise ConfigError(f"derivative must be one of {DERIVATIVE_CHOICES}, got {self.derivative!r}")
        if not 2 <= self.classes <= 10:
            raise ConfigError(f"classes must lie in [2, 10], got {self.classes}")
        if self.folds < 2:
            raise ConfigError("folds must be >= 2")
        return self

    def to_json(self) -> dict:
        d = dataclasses.asdict(self)
        d["generator"] = self.generator.to_dict()
        d["hyperparams"] = self.hyperparams.to_dict()
        return d

    def digest(self) -> str:
        return hashlib.sha256(json.dumps(self.to_json(), sort_keys=True).encode()).hexdigest()


def _typed(template, raw: str, key: str):
    try:
        if isinstance(template, bool):
            return configparser.ConfigParser.BOOLEAN_STATES[raw.strip().lower()]
        if isinstance(template, int):
            return int(raw)
        if isinstance(template, float):
            return float(raw)
    except (KeyError, ValueError):
        raise ConfigError(f"bad value for {key}: {raw!r}") from None
    return raw.strip()


def load_config(path: str | Path | None) -> RunConfig:
    cfg = RunConfig()
    if path is None:
        return cfg
    parser = configparser.ConfigParser()
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except configparser.Error as exc:
        raise ConfigError(f"unreadable config file {path}: {exc}") from None
    known = {"paths", "generator", "pipeline", "hyperparams", "tune", "drift"}
    unknown = set(parser.sections()) - known
    if unknown:
        raise ConfigError(f"unknown config sections {sorted(unknown)}")

    def flat(section: str, keys: tuple[str, ...]):
        if not parser.has_section(section):
            return
        for key, raw in parser.items(section):
            if key not in keys:
                raise ConfigError(f"unknown key [{section}] {key}")
            setattr(cfg, key, _typed(getattr(cfg, key), raw, f"[{section}] {key}"))

    flat("paths", ("data", "models", "reports"))
    flat("pipeline", ("features", "derivative", "classes", "split_seed", "strict"))
    flat("tune", ("grid", "folds"))
    flat("drift", ("magnitude",))

    if parser.has_section("generator"):
        gen = cfg.generator.to_dict()
        vocab = dict(gen["vocab_sizes"])
        for key, raw in parser.items("generator"):
            if key.startswith("vocab_") and key[6:] in DEFAULT_VOCAB:
                vocab[key[6:]] = _typed(1, raw, f"[generator] {key}")
            elif key in gen and key != "vocab_sizes":
                gen[key] = _typed(gen[key], raw, f"[generator] {key}")
            else:
                raise ConfigError(f"unknown key [generator] {key}")
        gen["vocab_sizes"] = vocab
        cfg.generator = GeneratorConfig.from_dict(gen)
    if parser.has_section("hyperparams"):
        hp = cfg.hyperparams.to_dict()
        for key, raw in parser.items("hyperparams"):
            if key not in hp:
                raise ConfigError(f"unknown key [hyperparams] {key}")
            hp[key] = _typed(hp[key], raw, f"[hyperparams] {key}")
        cfg.hyperparams = Hyperparams.from_dict(hp)
    return cfg.validate()
