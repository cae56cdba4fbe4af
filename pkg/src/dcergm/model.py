"""Degree-corrected ERGM parameters, unnormalized densities and conditional means.

Zero-one model:    log w(G) = theta * N(H, G) / n**(zeta - 2) + sum_i beta_i d_i
Two-star +-1 model: log w(Y) = theta / (n - 1) * Ntilde(Y) + 1/2 sum_i beta_i k_i,
with Ntilde(Y) = 1/2 sum_i k_i**2 - n(n-1)/2.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .graph import Encoding, Graph, degrees, pair_arrays, pair_index
from .motifs import K12, SubgraphSpec, count_subgraph, count_through_edge


class Regime(str, enum.Enum):
    THETA1 = "Theta1"
    THETA2 = "Theta2"
    THETA3 = "Theta3"


def psi(x):
    """Logistic function e^x / (1 + e^x)."""
    return expit(x)


@dataclass(frozen=True, eq=False)
class Model:
    n: int
    theta: float
    beta: np.ndarray
    motif: SubgraphSpec = K12
    encoding: Encoding = Encoding.ZERO_ONE

    def __post_init__(self):
        n = int(self.n)
        if n < 2:
            raise ValueError("model needs n >= 2")
        theta = float(self.theta)
        if not np.isfinite(theta) or theta < 0:
            raise ValueError(f"theta must be finite and >= 0, got {self.theta}")
        beta = np.asarray(self.beta, dtype=float)
        if beta.ndim == 0:
            beta = np.full(n, float(beta))
        if beta.shape != (n,):
            raise ValueError(f"beta must have length {n}, got shape {beta.shape}")
        if not np.isfinite(beta).all():
            raise ValueError("beta must be finite")
        beta = beta.copy()
        beta.flags.writeable = False
        enc = Encoding.parse(self.encoding)
        if enc is Encoding.PLUS_MINUS and self.motif.kind != "K12":
            raise ValueError("the plus-minus encoding is only defined for the two-star motif")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "encoding", enc)

    @classmethod
    def two_star(cls, n: int, theta: float, beta) -> "Model":
        return cls(n, theta, beta, K12, Encoding.PLUS_MINUS)

    @classmethod
    def general(cls, n: int, theta: float, beta, motif: SubgraphSpec) -> "Model":
        return cls(n, theta, beta, motif, Encoding.ZERO_ONE)

    @property
    def is_two_star(self) -> bool:
        return self.motif.kind == "K12" and self.encoding is Encoding.PLUS_MINUS

    @property
    def beta0(self) -> float | None:
        """Common value when beta is constant, else None."""
        b = self.beta
        return float(b[0]) if np.all(b == b[0]) else None

    def with_beta(self, beta) -> "Model":
        return Model(self.n, self.theta, beta, self.motif, self.encoding)

    def to_dict(self) -> dict:
        return {"n": self.n, "theta": self.theta, "beta": self.beta.tolist(),
                "motif": self.motif.to_dict(), "encoding": self.encoding.value}

    def __eq__(self, other):
        if not isinstance(other, Model):
            return NotImplemented
        return (self.n == other.n and self.theta == other.theta
                and np.array_equal(self.beta, other.beta)
                and self.motif == other.motif and self.encoding is other.encoding)

    def __hash__(self):
        return hash((self.n, self.theta, self.beta.tobytes(), self.motif, self.encoding))


@dataclass(frozen=True)
class AlternativeSpec:
    """Sparse planted signal: beta_i = beta0 + A on ``support``, beta0 elsewhere.

    ``support`` holds 0-based vertex indices; the default is the first ``s``.
    """
    beta0: float
    s: int
    A: float
    support: tuple[int, ...] | None = field(default=None)

    def __post_init__(self):
        if int(self.s) < 1:
            raise ValueError("signal count s must be >= 1")
        if self.A < 0 or not np.isfinite(self.A):
            raise ValueError("signal strength A must be finite and >= 0")
        sup = tuple(range(int(self.s))) if self.support is None else tuple(int(i) for i in self.support)
        if len(sup) != int(self.s) or len(set(sup)) != len(sup):
            raise ValueError("support must hold s distinct indices")
        object.__setattr__(self, "s", int(self.s))
        object.__setattr__(self, "support", sup)

    def validate(self, n: int):
        if self.s > n:
            raise ValueError(f"s={self.s} exceeds n={n}")
        if min(self.support) < 0 or max(self.support) >= n:
            raise ValueError(f"support index out of range for n={n}")


def make_beta(alt: AlternativeSpec, n: int) -> np.ndarray:
    alt.validate(n)
    beta = np.full(n, float(alt.beta0))
    beta[list(alt.support)] += alt.A
    return beta


def classify_regime(theta: float, beta0: float) -> Regime:
    if theta <= 0:
        raise ValueError("regimes are defined for theta > 0")
    if beta0 != 0 or theta < 0.5:
        return Regime.THETA1
    if theta > 0.5:
        return Regime.THETA2
    return Regime.THETA3


def _check_encoding(g: Graph, m: Model):
    if g.n != m.n:
        raise ValueError(f"graph has n={g.n}, model n={m.n}")
    if g.encoding is not m.encoding:
        raise ValueError(f"graph encoding {g.encoding.value} does not match model {m.encoding.value}")


def two_star_statistic(y: Graph) -> int:
    """sum_i sum_{j<k, j,k != i} Y_ij Y_ik = 1/2 sum k_i^2 - n(n-1)/2 for +-1 graphs."""
    if y.encoding is not Encoding.PLUS_MINUS:
        raise ValueError("two_star_statistic needs a plus-minus graph")
    k = degrees(y)
    return int((k * k).sum() - y.n * (y.n - 1)) // 2


def log_weight(g: Graph, m: Model) -> float:
    _check_encoding(g, m)
    if m.encoding is Encoding.PLUS_MINUS:
        k = degrees(g)
        return m.theta / (m.n - 1) * two_star_statistic(g) + 0.5 * float(m.beta @ k)
    d = degrees(g)
    lin = float(m.beta @ d)
    if m.theta == 0:
        return lin
    return m.theta * count_subgraph(m.motif, g) / m.n ** (m.motif.zeta - 2) + lin


def conditional_edge_mean(e, g: Graph, m: Model) -> float:
    """E(G_e | all other pairs) under ``m``.

    Zero-one: psi(theta * t_e + beta_i + beta_j).  Plus-minus two-star: the
    mean of Y_e from the log-weight difference between Y_e = +1 and -1.
    """
    _check_encoding(g, m)
    i, j = int(e[0]), int(e[1])
    pair_index(g.n, i, j)
    if m.encoding is Encoding.ZERO_ONE:
        t_e = count_through_edge(m.motif, g, (i, j)).scaled
        return float(psi(m.theta * t_e + m.beta[i] + m.beta[j]))
    diff = log_weight(g.with_edge(i, j, True), m) - log_weight(g.with_edge(i, j, False), m)
    return float(np.tanh(diff / 2))


def conditional_mean_matrix(g: Graph, m: Model) -> np.ndarray:
    """Conditional means of every pair, in bit order (vectorized closed forms)."""
    _check_encoding(g, m)
    rows, cols = pair_arrays(m.n)
    bsum = m.beta[rows] + m.beta[cols]
    vals = g.values().astype(np.int64)
    if m.encoding is Encoding.PLUS_MINUS:
        k = degrees(g)
        field_ = m.theta / (m.n - 1) * (k[rows] + k[cols] - 2 * vals) + 0.5 * bsum
        return np.tanh(field_)
    kind = m.motif.kind
    if m.theta == 0:
        return psi(bsum)
    if kind == "K2":
        t = np.full(rows.size, 2.0)
    elif kind == "K12":
        d = degrees(g)
        t = 2.0 * (d[rows] + d[cols] - 2 * vals) / m.n
    elif kind == "K3":
        a = g.adjacency().astype(np.int64)
        t = 6.0 * (a @ a)[rows, cols] / m.n
    else:
        t = np.array([count_through_edge(m.motif, g, (int(r), int(c))).scaled
                      for r, c in zip(rows, cols)])
    return psi(m.theta * t + bsum)
