"""Exhaustive enumeration over all graphs on n <= 6 vertices.

States are indexed by the integer edge bitmask (bit e = pair e in
``pair_arrays`` order).  Motif counts here go through an explicit sum over
injective maps, deliberately independent of the closed forms in
:mod:`dcergm.motifs`.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.special import logsumexp

from .fixedpoint import find_t
from .graph import Encoding, Graph, n_pairs, pair_arrays
from .model import AlternativeSpec, Model, conditional_edge_mean, make_beta, psi
from .motifs import K12

MAX_N = 6


def _check_n(n: int):
    if n > MAX_N:
        raise ValueError(f"exhaustive enumeration is capped at n={MAX_N} (got n={n})")
    if n < 2:
        raise ValueError("need n >= 2")


class StateSpace:
    """All 2^m graphs on n vertices: presence bits, degrees, incidence."""

    _cache: dict[int, "StateSpace"] = {}

    def __init__(self, n: int):
        _check_n(n)
        self.n = n
        self.m = n_pairs(n)
        masks = np.arange(1 << self.m, dtype=np.int64)
        self.bits = ((masks[:, None] >> np.arange(self.m)) & 1).astype(np.int8)
        rows, cols = pair_arrays(n)
        inc = np.zeros((self.m, n), dtype=np.int64)
        inc[np.arange(self.m), rows] = 1
        inc[np.arange(self.m), cols] = 1
        self.incidence = inc
        self.d = self.bits.astype(np.int64) @ inc          # zero-one degrees
        self.k = 2 * self.d - (n - 1)                       # plus-minus degrees
        self.pair_of = {(int(r), int(c)): e for e, (r, c) in enumerate(zip(rows, cols))}

    @classmethod
    def get(cls, n: int) -> "StateSpace":
        if n not in cls._cache:
            cls._cache[n] = cls(n)
        return cls._cache[n]

    def values(self, encoding: Encoding) -> np.ndarray:
        if encoding is Encoding.ZERO_ONE:
            return self.bits
        return (2 * self.bits - 1).astype(np.int8)

    def native_degrees(self, encoding: Encoding) -> np.ndarray:
        return self.d if encoding is Encoding.ZERO_ONE else self.k

    def motif_counts(self, motif) -> np.ndarray:
        """N(H, G) for every state by summing over injective maps."""
        total = np.zeros(1 << self.m, dtype=np.int64)
        if motif.zeta > self.n:
            return total
        for image in itertools.permutations(range(self.n), motif.zeta):
            cols = [self.pair_of[(min(image[u], image[v]), max(image[u], image[v]))]
                    for u, v in motif.edges]
            total += np.prod(self.bits[:, cols], axis=1, dtype=np.int64)
        return total


def base_log_weight(space: StateSpace, model: Model) -> np.ndarray:
    """The beta-independent part of the log weight, for every state."""
    n = model.n
    if model.theta == 0:
        return np.zeros(1 << space.m)
    if model.encoding is Encoding.PLUS_MINUS:
        k = space.k
        ntilde = 0.5 * (k * k).sum(axis=1) - n * (n - 1) / 2
        return model.theta / (n - 1) * ntilde
    return model.theta * space.motif_counts(model.motif) / n ** (model.motif.zeta - 2)


def linear_term(space: StateSpace, model: Model, beta) -> np.ndarray:
    beta = np.asarray(beta, dtype=float)
    if model.encoding is Encoding.PLUS_MINUS:
        return 0.5 * (space.k @ beta)
    return space.d @ beta


@dataclass(frozen=True)
class RestrictionEvent:
    """A degree predicate: ``predicate(degrees[states, n]) -> bool[states]``."""
    name: str
    predicate: Callable[[np.ndarray], np.ndarray]
    params: dict = field(default_factory=dict)

    def mask(self, space: StateSpace, encoding: Encoding) -> np.ndarray:
        return np.asarray(self.predicate(space.native_degrees(encoding)), dtype=bool)

    def contains_degrees(self, k: np.ndarray) -> bool:
        return bool(self.predicate(np.asarray(k)[None, :])[0])

    @classmethod
    def everything(cls) -> "RestrictionEvent":
        return cls("all", lambda k: np.ones(k.shape[0], dtype=bool))

    @classmethod
    def u_event(cls, theta: float, n: int) -> "RestrictionEvent":
        """U = {k_i >= (n-1) t / 2 for all i}, t the positive root of x = tanh(2 theta x)."""
        t = find_t(theta)
        cut = (n - 1) * t / 2
        return cls("U", lambda k: (k >= cut).all(axis=-1), {"theta": theta, "n": n, "t": t, "cut": cut})


@dataclass(frozen=True, eq=False)
class ExactDistribution:
    model: Model
    log_z: float
    probs: np.ndarray
    restriction: RestrictionEvent | None = None

    @property
    def space(self) -> StateSpace:
        return StateSpace.get(self.model.n)

    def graph(self, mask: int) -> Graph:
        return Graph.from_bitmask(self.model.n, mask, self.model.encoding)

    def expect(self, values: np.ndarray) -> np.ndarray:
        return np.tensordot(self.probs, values, axes=(0, 0))


def _log_z(base, lin, keep=None):
    lw = base + lin
    if keep is not None:
        lw = np.where(keep, lw, -np.inf)
    return float(logsumexp(lw))


def exact_distribution(model: Model, restriction: RestrictionEvent | None = None) -> ExactDistribution:
    space = StateSpace.get(model.n)
    lw = base_log_weight(space, model) + linear_term(space, model, model.beta)
    if restriction is not None:
        keep = restriction.mask(space, model.encoding)
        if not keep.any():
            raise ValueError(f"restriction {restriction.name} is empty for n={model.n}")
        lw = np.where(keep, lw, -np.inf)
    log_z = float(logsumexp(lw))
    probs = np.exp(lw - log_z)
    return ExactDistribution(model, log_z, probs, restriction)


@dataclass
class ExactMoments:
    edge_mean: np.ndarray      # per pair, native encoding
    edge_cov: np.ndarray       # pair x pair
    degree_mean: np.ndarray
    degree_cov: np.ndarray     # n x n
    total_degree_mean: float

    def to_dict(self) -> dict:
        return {k: (v.tolist() if isinstance(v, np.ndarray) else v) for k, v in self.__dict__.items()}


def exact_moments(dist: ExactDistribution) -> ExactMoments:
    space = dist.space
    p = dist.probs
    y = space.values(dist.model.encoding).astype(float)
    k = space.native_degrees(dist.model.encoding).astype(float)
    ey = p @ y
    yc = y - ey
    cov_y = (yc * p[:, None]).T @ yc
    ek = p @ k
    kc = k - ek
    cov_k = (kc * p[:, None]).T @ kc
    return ExactMoments(ey, cov_y, ek, cov_k, float(ek.sum()))


# -- likelihood-ratio second moment ---------------------------------------------

def _null_model(n, theta, beta0, motif, encoding) -> Model:
    return Model(n, theta, np.full(n, float(beta0)), motif, encoding)


def lr_second_moment(n: int, s: int, A: float, theta: float, beta0: float,
                     restriction: RestrictionEvent | None = None, method: str = "ratio",
                     motif=K12, encoding=Encoding.PLUS_MINUS) -> float:
    """E_null L^2 for the uniform prior over size-s supports with strength A.

    ``method="ratio"`` uses partition functions only:
        avg_{S1,S2} Z(b0) Z(b_S1 + b_S2 - b0) / (Z(b_S1) Z(b_S2));
    ``method="direct"`` sums Q(Y)^2 / P0(Y) over all states.  With a
    restriction every measure (null and alternatives) is conditioned on it.
    """
    encoding = Encoding.parse(encoding)
    null = _null_model(n, theta, beta0, motif, encoding)
    AlternativeSpec(beta0, s, A).validate(n)
    space = StateSpace.get(n)
    base = base_log_weight(space, null)
    keep = None if restriction is None else restriction.mask(space, encoding)
    supports = list(itertools.combinations(range(n), s))
    betas = {S: make_beta(AlternativeSpec(beta0, s, A, S), n) for S in supports}
    b0 = null.beta
    if method == "ratio":
        logz = {S: _log_z(base, linear_term(space, null, b), keep) for S, b in betas.items()}
        logz0 = _log_z(base, linear_term(space, null, b0), keep)
        terms = []
        for S1 in supports:
            for S2 in supports:
                mixed = betas[S1] + betas[S2] - b0
                terms.append(logz0 + _log_z(base, linear_term(space, null, mixed), keep)
                             - logz[S1] - logz[S2])
        return float(np.exp(logsumexp(terms) - np.log(len(terms))))
    if method == "direct":
        def probs(beta):
            lw = base + linear_term(space, null, beta)
            if keep is not None:
                lw = np.where(keep, lw, -np.inf)
            return np.exp(lw - logsumexp(lw))
        p0 = probs(b0)
        q = np.mean([probs(b) for b in betas.values()], axis=0)
        on = p0 > 0
        return float(np.sum(q[on] ** 2 / p0[on]))
    raise ValueError(f"unknown method {method!r}")


def lb_bound_check(n: int, s: int, A: float, theta: float, beta0: float) -> dict:
    """Exact E L^2 against exp{A^2 s^2 Cov + (2 s^2 / n)(exp(A^2 Var) - 1)}.

    Cov(k_1, k_2) and Var(k_1) are taken under the two-star model with
    beta = (beta0 / 2) 1.  The comparison argument behind the bound needs all
    interpolating beta of one sign; ``ghs_applicable`` is False when
    beta0 < 0 < beta0 + 2A, where the result is informational only.
    """
    if not n > 2 * s:
        raise ValueError(f"bound requires n > 2s (n={n}, s={s})")
    _check_n(n)
    lhs = lr_second_moment(n, s, A, theta, beta0)
    mom = exact_moments(exact_distribution(Model.two_star(n, theta, np.full(n, beta0 / 2))))
    cov12 = float(mom.degree_cov[0, 1])
    var1 = float(mom.degree_cov[0, 0])
    rhs = float(np.exp(A * A * s * s * cov12 + 2 * s * s / n * np.expm1(A * A * var1)))
    ghs = not (beta0 < 0 < beta0 + 2 * A)
    return {"n": n, "s": s, "A": A, "theta": theta, "beta0": beta0,
            "lhs": lhs, "rhs": rhs, "holds": bool(lhs <= rhs * (1 + 1e-12)),
            "cov12": cov12, "var1": var1, "ghs_applicable": ghs}


# -- auxiliary-variable representation ------------------------------------------

def aux_log_marginal(phi: np.ndarray, theta: float, beta: np.ndarray) -> np.ndarray:
    """log f(phi) = -sum_{i<j} [theta/2 (x^2 + y^2) - log cosh(theta (x + y) + (b_i + b_j)/2)]."""
    phi = np.atleast_2d(phi)
    n = phi.shape[1]
    rows, cols = pair_arrays(n)
    x, y = phi[:, rows], phi[:, cols]
    z = theta * (x + y) + 0.5 * (beta[rows] + beta[cols])
    logcosh = np.logaddexp(z, -z) - np.log(2)
    return -(0.5 * theta * (x * x + y * y) - logcosh).sum(axis=1)


def aux_log_joint(phi: np.ndarray, theta: float, beta: np.ndarray) -> np.ndarray:
    """log of P(Y) * N(phi; k/(n-1), 1/(theta (n-1)) I), unnormalized in P, per (grid point, state)."""
    phi = np.atleast_2d(phi)
    n = phi.shape[1]
    model = Model.two_star(n, theta, beta)
    space = StateSpace.get(n)
    lw = base_log_weight(space, model) + linear_term(space, model, beta)
    mean = space.k / (n - 1)                               # states x n
    diff = phi[:, None, :] - mean[None, :, :]
    gauss = -0.5 * theta * (n - 1) * (diff * diff).sum(axis=2)
    return lw[None, :] + gauss


def _grid_points(grid, n):
    g = np.asarray(grid, dtype=float)
    if g.ndim == 1:
        return np.array(list(itertools.product(g, repeat=n)))
    if g.ndim != 2 or g.shape[1] != n:
        raise ValueError(f"grid must be 1-D or have {n} columns")
    return g


def aux_joint_check(n: int, theta: float, beta, grid=None) -> dict:
    """Ratio-constancy of sum_Y joint(phi, Y) against f(phi) over a phi grid.

    Also checks that the joint, conditioned on phi, makes the pairs
    independent with P(Y_ij = +1 | phi) = psi(2 theta (phi_i + phi_j) + beta_i + beta_j).
    """
    if n not in (2, 3):
        raise ValueError("aux_joint_check supports n in {2, 3}")
    if theta <= 0:
        raise ValueError("theta must be positive")
    beta = np.broadcast_to(np.asarray(beta, dtype=float), (n,)).copy()
    if grid is None:
        grid = np.linspace(-3, 3, 13)
    pts = _grid_points(grid, n)
    lj = aux_log_joint(pts, theta, beta)
    log_ratio = logsumexp(lj, axis=1) - aux_log_marginal(pts, theta, beta)
    spread = float(log_ratio.max() - log_ratio.min())
    # conditional law of Y given phi versus the product form
    space = StateSpace.get(n)
    cond = np.exp(lj - logsumexp(lj, axis=1, keepdims=True))
    rows, cols = pair_arrays(n)
    z = 2 * theta * (pts[:, rows] + pts[:, cols]) + beta[rows] + beta[cols]
    p_plus = 1 / (1 + np.exp(-z))                          # grid x pairs
    yb = space.bits.astype(bool)                           # states x pairs
    prod = np.exp(np.where(yb[None], np.log(p_plus)[:, None, :],
                           np.log1p(-p_plus)[:, None, :]).sum(axis=2))
    cond_err = float(np.abs(cond - prod).max())
    rel = float(np.expm1(spread))
    return {"n": n, "theta": theta, "beta": beta.tolist(), "grid_points": int(len(pts)),
            "max_relative_discrepancy": rel, "conditional_max_abs_error": cond_err,
            "pass": bool(rel < 1e-8 and cond_err < 1e-10)}


# -- explicit one-step kernels ----------------------------------------------------

def glauber_kernel(model: Model) -> np.ndarray:
    """Transition matrix of one random-scan single-pair heat-bath update (n <= 4).

    Built state by state from ``conditional_edge_mean``; rows are bitmask order.
    """
    if model.n > 4:
        raise ValueError("explicit kernels are limited to n <= 4")
    n = model.n
    m = n_pairs(n)
    rows, cols = pair_arrays(n)
    size = 1 << m
    kern = np.zeros((size, size))
    pm = model.encoding is Encoding.PLUS_MINUS
    for mask in range(size):
        g = Graph.from_bitmask(n, mask, model.encoding)
        for e in range(m):
            mean = conditional_edge_mean((int(rows[e]), int(cols[e])), g, model)
            p_on = 0.5 * (1 + mean) if pm else mean
            kern[mask, mask | (1 << e)] += p_on / m
            kern[mask, mask & ~(1 << e)] += (1 - p_on) / m
    return kern


def aux_kernel_quadrature(model: Model, nodes: int = 64) -> np.ndarray:
    """One phi/Y cycle as a matrix for the n = 2 two-star model.

    The Gaussian phi | Y integral is done by Gauss-Hermite quadrature with
    ``nodes`` points per coordinate.
    """
    if model.n != 2 or not model.is_two_star:
        raise ValueError("quadrature kernel is for the n = 2 two-star model")
    theta, beta = model.theta, np.asarray(model.beta, float)
    x, w = np.polynomial.hermite_e.hermegauss(nodes)
    w = w / w.sum()
    sd = 1 / np.sqrt(theta)                       # n - 1 = 1
    kern = np.zeros((2, 2))
    for mask in (0, 1):
        y = 1 if mask else -1
        phi1 = y + sd * x[:, None]
        phi2 = y + sd * x[None, :]
        p_plus = psi(2 * theta * (phi1 + phi2) + beta[0] + beta[1])
        kern[mask, 1] = float((w[:, None] * w[None, :] * p_plus).sum())
        kern[mask, 0] = 1 - kern[mask, 1]
    return kern


def stationarity_defect(dist: ExactDistribution, kernel: np.ndarray) -> float:
    """max_G' |sum_G p(G) K(G, G') - p(G')|."""
    return float(np.abs(dist.probs @ kernel - dist.probs).max())


# -- reports ----------------------------------------------------------------------

def oracle_suite(n: int, theta: float, beta0: float = 0.0, s: int = 1, A: float = 0.3) -> dict:
    """Run the oracle self-consistency checks for one parameter point."""
    _check_n(n)
    checks = []

    def add(name, value, tol, ok):
        checks.append({"check": name, "value": value, "tolerance": tol, "pass": bool(ok)})

    for enc in (Encoding.ZERO_ONE, Encoding.PLUS_MINUS):
        m = Model(n, theta, np.full(n, beta0), K12, enc)
        d = exact_distribution(m)
        add(f"normalization[{enc.value}]", float(abs(d.probs.sum() - 1)), 1e-12, abs(d.probs.sum() - 1) < 1e-12)
    # factorization of the beta model
    rng = np.random.default_rng(0)
    beta = rng.normal(size=n)
    d = exact_distribution(Model(n, 0.0, beta, K12, Encoding.ZERO_ONE))
    mom = exact_moments(d)
    rows, cols = pair_arrays(n)
    marg_err = float(np.abs(mom.edge_mean - 1 / (1 + np.exp(-(beta[rows] + beta[cols])))).max())
    off = mom.edge_cov - np.diag(np.diag(mom.edge_cov))
    add("theta0_edge_marginals", marg_err, 1e-12, marg_err < 1e-12)
    add("theta0_edge_covariances", float(np.abs(off).max()), 1e-12, np.abs(off).max() < 1e-12)
    if s < n:
        r = lr_second_moment(n, s, A, theta, beta0, method="ratio")
        dd = lr_second_moment(n, s, A, theta, beta0, method="direct")
        add("lr_dual_path", abs(r - dd), 1e-10, abs(r - dd) < 1e-10)
        add("lr_at_least_one", r, 0.0, r >= 1 - 1e-12)
    if n <= 3 and theta > 0:
        aux = aux_joint_check(n, theta, np.full(n, beta0), np.linspace(-3, 3, 9))
        add("aux_ratio_constancy", aux["max_relative_discrepancy"], 1e-8, aux["pass"])
    return {"model": {"n": n, "theta": theta, "beta0": beta0, "s": s, "A": A},
            "checks": checks, "pass": all(c["pass"] for c in checks)}


def to_json(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True)
