"""Batch feature sampling shared by calibration and the experiments.

A batch of ``n_samples`` draws is split over ``chains`` independent chains,
each seeded from ``(seed, chain index)`` and started from a uniform random
graph.  Every draw records the feature vector described in
:mod:`dcergm._kernels` (total degree, centered sum/max under a given null,
phi summaries, restriction membership, degree moments).
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .graph import Encoding, pair_arrays
from .model import Model
from .oracle import exact_distribution
from .samplers import default_shift_moves, derive_seed, kernel_mode, shift_sigma


@dataclass
class SamplingPlan:
    sampler: str = "aux"            # "aux", "glauber" or "exact"
    chains: int | None = None       # default: ceil(n_samples / per_chain)
    per_chain: int = 50
    burnin: int = 200
    thinning: int = 4
    shift_moves: int | None = None  # default depends on the model
    threads: int = 1

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class FeatureBatch:
    features: np.ndarray   # n_samples x N_FEATURES
    chain_id: np.ndarray   # chain index per row
    seeds: list[int]
    shift_acceptance: float

    def column(self, idx: int) -> np.ndarray:
        return self.features[:, idx]

    def ess(self, idx: int) -> float:
        """Effective sample size of one column from within-chain lag-1 autocorrelation."""
        x = self.features[:, idx]
        if not np.isfinite(x).all():
            return float("nan")
        num = 0.0
        den = 0.0
        for c in np.unique(self.chain_id):
            xc = x[self.chain_id == c]
            if xc.size < 3:
                continue
            xc = xc - xc.mean()
            num += float(np.dot(xc[:-1], xc[1:]))
            den += float(np.dot(xc, xc))
        rho = num / den if den > 0 else 0.0
        rho = min(max(rho, 0.0), 0.99)
        return x.size * (1 - rho) / (1 + rho)


def sample_features(model: Model, n_samples: int, seed: int, plan: SamplingPlan | None = None,
                    null_theta: float | None = None, null_beta0: float = 0.0,
                    ell: float = 2.0, center: float = 0.0, cut: float = -math.inf,
                    want_centered: bool = True) -> FeatureBatch:
    """Draw ``n_samples`` feature rows from ``model``.

    Centered statistics use the null (``null_theta``, ``null_beta0``), which
    defaults to the model's own theta.
    """
    plan = plan or SamplingPlan()
    if n_samples < 1:
        raise ValueError("n_samples must be positive")
    theta0 = model.theta if null_theta is None else float(null_theta)
    if plan.sampler == "exact":
        return _exact_features(model, n_samples, seed, theta0, null_beta0, ell, center, cut, want_centered)
    if plan.sampler not in ("aux", "glauber"):
        raise ValueError(f"unknown sampler {plan.sampler!r}")
    if plan.sampler == "aux" and not model.is_two_star:
        raise ValueError("the aux sampler needs the plus-minus two-star model")
    mode = kernel_mode(model)
    kind = K.KIND_AUX if plan.sampler == "aux" else K.KIND_GLAUBER
    chains = plan.chains or max(1, math.ceil(n_samples / plan.per_chain))
    sizes = [n_samples // chains + (1 if c < n_samples % chains else 0) for c in range(chains)]
    rows, cols = pair_arrays(model.n)
    beta = np.ascontiguousarray(model.beta, dtype=float)
    moves = default_shift_moves(model) if plan.shift_moves is None else plan.shift_moves
    sigma = shift_sigma(model.n, model.theta) if model.theta > 0 else 0.0
    seeds = [derive_seed(seed, c) for c in range(chains)]

    def run(c):
        if sizes[c] == 0:
            return np.empty((0, K.N_FEATURES)), 0
        return K.chain_features(mode, kind, model.n, model.theta, beta, rows, cols, theta0,
                                float(null_beta0), plan.burnin, sizes[c], plan.thinning, moves,
                                sigma, float(ell), float(center), float(cut), bool(want_centered),
                                seeds[c])

    if plan.threads > 1:
        with ThreadPoolExecutor(plan.threads) as pool:
            results = list(pool.map(run, range(chains)))
    else:
        results = [run(c) for c in range(chains)]
    feats = np.vstack([r[0] for r in results])
    chain_id = np.concatenate([np.full(sizes[c], c) for c in range(chains)])
    proposals = moves * sum((plan.burnin + sizes[c] * plan.thinning) for c in range(chains))
    acc = sum(r[1] for r in results) / proposals if proposals and plan.sampler == "aux" else float("nan")
    return FeatureBatch(feats, chain_id, seeds, acc)


def _exact_features(model, n_samples, seed, theta0, beta0, ell, center, cut, want_centered):
    rng = np.random.default_rng(derive_seed(seed, 0))
    dist = exact_distribution(model)
    cdf = np.cumsum(dist.probs)
    masks = np.minimum(np.searchsorted(cdf, rng.random(n_samples) * cdf[-1], side="right"), cdf.size - 1)
    n = model.n
    rows, cols = pair_arrays(n)
    mode = kernel_mode(model)
    out = np.empty((n_samples, K.N_FEATURES))
    pm = model.encoding is Encoding.PLUS_MINUS
    for r, mask in enumerate(masks):
        bits = (int(mask) >> np.arange(rows.size)) & 1
        vals = (2 * bits - 1) if pm else bits
        a = np.zeros((n, n), dtype=np.int8)
        a[rows, cols] = vals
        a[cols, rows] = vals
        deg = a.sum(axis=1).astype(np.int64)
        if pm and model.theta > 0:
            phi = deg / (n - 1) + rng.standard_normal(n) / math.sqrt(model.theta * (n - 1))
        else:
            phi = np.zeros(0)
        K._record(out, r, mode, a, deg, phi, theta0, float(beta0), float(ell), float(center),
                  float(cut), bool(want_centered))
    return FeatureBatch(out, np.arange(n_samples), [derive_seed(seed, 0)], float("nan"))
