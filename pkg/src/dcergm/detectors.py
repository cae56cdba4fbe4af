"""Test statistics, threshold rules and decisions.

Statistics are computed in the graph's own encoding: pair values minus their
null conditional means given all other pairs, with the null beta = beta0 * 1.
"""
from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .engine import SamplingPlan, sample_features
from .graph import Graph, degrees, pair_arrays
from .model import Model, conditional_mean_matrix
from .motifs import K12, SubgraphSpec


class DetectorKind(str, enum.Enum):
    COND_CENTERED_SUM = "cond_centered_sum"
    COND_CENTERED_MAX = "cond_centered_max"
    TOTAL_DEGREE = "total_degree"

    @classmethod
    def parse(cls, v) -> "DetectorKind":
        if isinstance(v, DetectorKind):
            return v
        aliases = {"sum": cls.COND_CENTERED_SUM, "max": cls.COND_CENTERED_MAX,
                   "total": cls.TOTAL_DEGREE}
        v = str(v).lower()
        return aliases[v] if v in aliases else cls(v)

    @property
    def feature(self) -> int:
        return {DetectorKind.COND_CENTERED_SUM: K.F_SUM, DetectorKind.COND_CENTERED_MAX: K.F_MAX,
                DetectorKind.TOTAL_DEGREE: K.F_TOTAL}[self]


@dataclass(frozen=True)
class Explicit:
    value: float

    def to_dict(self):
        return {"mode": "explicit", "value": self.value}


@dataclass(frozen=True)
class Schedule:
    """L_n = c * n**gamma * log(n)**log_power."""
    c: float
    gamma: float
    log_power: float = 0.0

    def __post_init__(self):
        if not self.c > 0:
            raise ValueError("schedule constant c must be positive")

    def value(self, n: int) -> float:
        return self.c * n ** self.gamma * math.log(n) ** self.log_power

    def to_dict(self):
        return {"mode": "schedule", "c": self.c, "gamma": self.gamma, "log_power": self.log_power}


@dataclass(frozen=True)
class Calibrated:
    alpha: float = 0.05
    replications: int = 1000

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise ValueError("alpha must lie in (0, 1)")
        if self.replications < 100:
            raise ValueError("calibration needs at least 100 null replications")

    def to_dict(self):
        return {"mode": "calibrated", "alpha": self.alpha, "replications": self.replications}


@dataclass(frozen=True)
class Anchored:
    """L_n = c * rate(n) with c fixed by a level-alpha calibration at one anchor size.

    The rates sit strictly inside the windows where the centered tests are consistent:
    sum n * sqrt(s A) (between n and n s A), max sqrt(n log n), total
    n^(3/2) sqrt(log n).  The constant is the calibrated threshold at the
    anchor divided by the rate there, so type I error falls with n.
    """
    alpha: float = 0.05
    replications: int = 1000
    anchor_n: int | None = None

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise ValueError("alpha must lie in (0, 1)")
        if self.replications < 100:
            raise ValueError("calibration needs at least 100 null replications")

    def to_dict(self):
        return {"mode": "anchored", "alpha": self.alpha, "replications": self.replications,
                "anchor_n": self.anchor_n}


Threshold = Explicit | Schedule | Calibrated | Anchored


def rate(kind, n: int, s: int = 1, A: float = 1.0) -> float:
    kind = DetectorKind.parse(kind)
    if kind is DetectorKind.COND_CENTERED_SUM:
        return n * math.sqrt(max(s * A, 1e-300))
    if kind is DetectorKind.COND_CENTERED_MAX:
        return math.sqrt(n * math.log(n))
    return n ** 1.5 * math.sqrt(math.log(n))


def threshold_from_dict(d: dict) -> Threshold:
    mode = d.get("mode")
    if mode == "explicit":
        return Explicit(float(d["value"]))
    if mode == "schedule":
        return Schedule(float(d["c"]), float(d["gamma"]), float(d.get("log_power", 0.0)))
    if mode == "calibrated":
        return Calibrated(float(d.get("alpha", 0.05)), int(d.get("replications", 1000)))
    if mode == "anchored":
        anchor = d.get("anchor_n")
        return Anchored(float(d.get("alpha", 0.05)), int(d.get("replications", 1000)),
                        None if anchor is None else int(anchor))
    raise ValueError(f"unknown threshold mode {mode!r}")


@dataclass(frozen=True)
class DetectorConfig:
    kind: DetectorKind
    threshold: Threshold

    def __post_init__(self):
        object.__setattr__(self, "kind", DetectorKind.parse(self.kind))

    def to_dict(self):
        return {"kind": self.kind.value, "threshold": self.threshold.to_dict()}

    @classmethod
    def from_dict(cls, d: dict) -> "DetectorConfig":
        return cls(DetectorKind.parse(d["kind"]), threshold_from_dict(d["threshold"]))


@dataclass(frozen=True)
class TestDecision:
    statistic: float
    threshold: float
    reject: bool

    __test__ = False  # not a pytest class

    def to_dict(self):
        return {"statistic": self.statistic, "threshold": self.threshold, "reject": self.reject}


# -- statistics -----------------------------------------------------------------------

def _null_model(g: Graph, theta: float, beta0: float, motif: SubgraphSpec) -> Model:
    return Model(g.n, theta, np.full(g.n, float(beta0)), motif, g.encoding)


def centered_residuals(g: Graph, theta: float, beta0: float, motif: SubgraphSpec = K12) -> np.ndarray:
    """Per-pair residuals G_e - E_null(G_e | rest), in bit order."""
    m = _null_model(g, theta, beta0, motif)
    return g.values() - conditional_mean_matrix(g, m)


def cond_centered_sum(g: Graph, theta: float, beta0: float, motif: SubgraphSpec = K12) -> float:
    return float(centered_residuals(g, theta, beta0, motif).sum())


def centered_vertex_sums(g: Graph, theta: float, beta0: float, motif: SubgraphSpec = K12) -> np.ndarray:
    r = centered_residuals(g, theta, beta0, motif)
    rows, cols = pair_arrays(g.n)
    return np.bincount(rows, r, g.n) + np.bincount(cols, r, g.n)


def cond_centered_max(g: Graph, theta: float, beta0: float, motif: SubgraphSpec = K12) -> float:
    return float(centered_vertex_sums(g, theta, beta0, motif).max())


def total_degree(y: Graph) -> float:
    """sum_i k_i = 2 * (sum of pair values) in the graph's encoding."""
    return float(degrees(y).sum())


def statistic(kind, g: Graph, theta: float, beta0: float, motif: SubgraphSpec = K12) -> float:
    kind = DetectorKind.parse(kind)
    if kind is DetectorKind.COND_CENTERED_SUM:
        return cond_centered_sum(g, theta, beta0, motif)
    if kind is DetectorKind.COND_CENTERED_MAX:
        return cond_centered_max(g, theta, beta0, motif)
    return total_degree(g)


# -- thresholds -------------------------------------------------------------------------

def quantile_order_stat(values, alpha: float) -> float:
    """The ceil((1 - alpha) M)-th smallest value (1-based), no interpolation."""
    v = np.sort(np.asarray(values, dtype=float))
    if v.size == 0:
        raise ValueError("no values to take a quantile of")
    k = math.ceil((1 - alpha) * v.size - 1e-9)
    return float(v[min(max(k, 1), v.size) - 1])


def calibrate_threshold(cfg: DetectorConfig, null_model: Model, sampler: str = "aux",
                        seed: int = 0, plan: SamplingPlan | None = None) -> float:
    """Threshold for ``null_model.n``; anchored configs need :func:`anchored_constant`."""
    th = cfg.threshold
    if isinstance(th, Anchored):
        raise ValueError("anchored thresholds depend on (s, A); use anchored_constant")
    if isinstance(th, Explicit):
        return float(th.value)
    if isinstance(th, Schedule):
        return th.value(null_model.n)
    beta0 = null_model.beta0
    if beta0 is None:
        raise ValueError("calibration needs a null model with constant beta")
    plan = plan or SamplingPlan(sampler=sampler)
    batch = sample_features(null_model, th.replications, seed, plan, null_model.theta, beta0,
                            want_centered=cfg.kind is not DetectorKind.TOTAL_DEGREE)
    return quantile_order_stat(batch.column(cfg.kind.feature), th.alpha)


def anchored_constant(cfg: DetectorConfig, anchor_null: Model, s: int, A: float,
                      sampler: str = "aux", seed: int = 0, plan: SamplingPlan | None = None,
                      null_values=None) -> float:
    """c such that c * rate(anchor n) is the level-alpha calibrated threshold there."""
    th = cfg.threshold
    if not isinstance(th, Anchored):
        raise ValueError("not an anchored threshold")
    if null_values is None:
        cal = Calibrated(th.alpha, th.replications)
        l0 = calibrate_threshold(DetectorConfig(cfg.kind, cal), anchor_null, sampler, seed, plan)
    else:
        l0 = quantile_order_stat(null_values, th.alpha)
    return l0 / rate(cfg.kind, anchor_null.n, s, A)


def decide(stat: float, threshold: float) -> TestDecision:
    if not (math.isfinite(stat) and math.isfinite(threshold)):
        raise ValueError("statistic and threshold must be finite")
    return TestDecision(float(stat), float(threshold), bool(stat > threshold))


def detector_report(cfg: DetectorConfig, n: int, theta: float, beta0: float,
                    threshold: float, stat: float) -> dict:
    d = decide(stat, threshold)
    return {"kind": cfg.kind.value, "n": n, "theta": theta, "beta0": beta0,
            "threshold_mode": cfg.threshold.to_dict(), "L_n": threshold,
            "statistic": stat, "decision": "reject" if d.reject else "accept"}


def report_json(rep: dict) -> str:
    return json.dumps(rep, indent=2, sort_keys=True)
