"""Run configuration: parsing, validation, presets and manifest round-trips."""
from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, field
from pathlib import Path

import yaml

from .detectors import DetectorConfig
from .engine import SamplingPlan
from .graph import Encoding
from .motifs import NAMED

SUBCOMMANDS = ("sample", "test", "risk", "phase", "oracle")
THREADS_ENV = "DCERGM_THREADS"


class ConfigError(ValueError):
    pass


PRESETS = {
    "theta1": {"model": {"theta": 0.3, "beta0": 0.0}},
    "theta2": {"model": {"theta": 0.8, "beta0": 0.0}},
    "theta3": {"model": {"theta": 0.5, "beta0": 0.0},
               "sampler": {"kind": "aux", "burnin": 300, "thinning": 4}},
    "figure1": {
        "grid": {"cells": [[b, t] for b in (0.3, 0.6, 0.75) for t in (-0.9, -0.4, -0.25)],
                 "n_list": [100, 200, 400], "reps": 500},
        "detectors": [
            {"kind": "cond_centered_sum", "threshold": {"mode": "anchored", "alpha": 0.05, "replications": 1000}},
            {"kind": "cond_centered_max", "threshold": {"mode": "anchored", "alpha": 0.05, "replications": 1000}},
            {"kind": "total_degree", "threshold": {"mode": "calibrated", "alpha": 0.05, "replications": 1000}},
        ],
    },
}


@dataclass
class ModelConfig:
    n: int = 50
    theta: float = 0.3
    beta0: float = 0.0
    encoding: str = "plus_minus"
    motif: str = "K12"

    def validate(self):
        if self.n < 2:
            raise ConfigError("model.n must be >= 2")
        if not self.theta >= 0:
            raise ConfigError(f"model.theta must be >= 0 (got {self.theta})")
        try:
            enc = Encoding.parse(self.encoding)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if self.motif not in NAMED:
            raise ConfigError(f"model.motif must be one of {sorted(NAMED)}")
        if enc is Encoding.PLUS_MINUS and NAMED[self.motif].kind != "K12":
            raise ConfigError("plus_minus encoding requires the two-star motif")


@dataclass
class SamplerConfig:
    kind: str = "aux"
    burnin: int = 200
    thinning: int = 4
    per_chain: int = 50
    shift_moves: int | None = None

    def validate(self):
        if self.kind not in ("aux", "glauber", "exact"):
            raise ConfigError("sampler.kind must be aux, glauber or exact")
        if self.thinning < 1:
            raise ConfigError("sampler.thinning must be >= 1")
        if self.burnin < 0 or self.per_chain < 1:
            raise ConfigError("sampler.burnin must be >= 0 and per_chain >= 1")


@dataclass
class GridConfig:
    cells: list = field(default_factory=lambda: [[0.75, -0.25]])
    n_list: list = field(default_factory=lambda: [100, 200, 400])
    reps: int = 500

    def validate(self):
        if self.reps < 100:
            raise ConfigError("grid.reps must be >= 100")
        for c in self.cells:
            if len(c) != 2 or not (0 < c[0] < 1 and c[1] < 0):
                raise ConfigError(f"grid cell {c} needs 0 < b < 1 and t < 0")
        if not self.n_list or min(self.n_list) < 4:
            raise ConfigError("grid.n_list needs sizes >= 4")


@dataclass
class RunConfig:
    subcommand: str
    seed: int = 0
    threads: int = 1
    out: str = "results"
    format: str = "json"
    model: ModelConfig = field(default_factory=ModelConfig)
    sampler: SamplerConfig = field(default_factory=SamplerConfig)
    detectors: list = field(default_factory=lambda: [
        {"kind": "cond_centered_sum", "threshold": {"mode": "explicit", "value": 0.0}}])
    alternative: dict = field(default_factory=lambda: {"b": 0.6, "t": -0.9})
    grid: GridConfig = field(default_factory=GridConfig)
    n_samples: int = 100
    include_graph: bool = False
    input: str | None = None
    oracle: dict = field(default_factory=lambda: {"s": 1, "A": 0.3})

    # -- validation --------------------------------------------------------------
    def validate(self) -> "RunConfig":
        if self.subcommand not in SUBCOMMANDS:
            raise ConfigError(f"subcommand must be one of {SUBCOMMANDS}")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")
        if self.format not in ("csv", "json"):
            raise ConfigError("format must be csv or json")
        self.model.validate()
        self.sampler.validate()
        self.grid.validate()
        if self.n_samples < 1:
            raise ConfigError("n_samples must be >= 1")
        try:
            self.detector_configs()
        except (KeyError, ValueError, TypeError) as exc:
            raise ConfigError(f"bad detector config: {exc}") from None
        if self.subcommand == "test" and not self.input:
            raise ConfigError("test needs an input graph file")
        if self.subcommand == "oracle" and self.model.n > 6:
            raise ConfigError("oracle runs need model.n <= 6")
        if self.subcommand == "risk":
            alt = self.alternative
            if not (("b" in alt and "t" in alt) or ("s" in alt and "A" in alt)):
                raise ConfigError("alternative needs (b, t) or (s, A)")
        return self

    def detector_configs(self) -> list[DetectorConfig]:
        return [DetectorConfig.from_dict(d) for d in self.detectors]

    def plan(self) -> SamplingPlan:
        s = self.sampler
        return SamplingPlan(s.kind, None, s.per_chain, s.burnin, s.thinning, s.shift_moves, self.threads)

    # -- (de)serialization ---------------------------------------------------------
    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        d = dict(d)
        presets = d.pop("preset", None) or []
        if isinstance(presets, str):
            presets = [presets]
        merged: dict = {}
        for p in presets:
            if p not in PRESETS:
                raise ConfigError(f"unknown preset {p!r}; choose from {sorted(PRESETS)}")
            _deep_update(merged, PRESETS[p])
        _deep_update(merged, d)
        known = set(cls.__dataclass_fields__)
        extra = set(merged) - known
        if extra:
            raise ConfigError(f"unknown config keys: {sorted(extra)}")
        if "subcommand" not in merged:
            raise ConfigError("config needs a subcommand")
        try:
            merged["model"] = ModelConfig(**merged.get("model", {}))
            merged["sampler"] = SamplerConfig(**merged.get("sampler", {}))
            merged["grid"] = GridConfig(**merged.get("grid", {}))
            cfg = cls(**merged)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None
        return cfg


def _deep_update(base: dict, new: dict):
    for k, v in new.items():
        if isinstance(v, dict) and isinstance(base.get(k), dict):
            _deep_update(base[k], v)
        else:
            base[k] = v


def load_config(path) -> dict:
    text = Path(path).read_text()
    try:
        data = json.loads(text) if str(path).endswith(".json") else yaml.safe_load(text)
    except (json.JSONDecodeError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{path} must hold a mapping")
    return data


def threads_from_env(default: int) -> int:
    raw = os.environ.get(THREADS_ENV)
    if raw is None:
        return default
    try:
        v = int(raw)
    except ValueError:
        raise ConfigError(f"{THREADS_ENV} must be an integer") from None
    if v < 1:
        raise ConfigError(f"{THREADS_ENV} must be >= 1")
    return v
