"""Markov chain and exact samplers.

``glauber_step`` / ``aux_step`` are plain-python reference steps built on the
model API.  ``run_chain`` and the experiment engine use the compiled kernels
in :mod:`dcergm._kernels`, which implement the same updates.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from . import _kernels as K
from .graph import Encoding, Graph, degrees, pair_arrays
from .model import Model, conditional_edge_mean, conditional_mean_matrix, psi
from .oracle import MAX_N, RestrictionEvent, exact_distribution

DEFAULT_BURNIN = 200
CRITICAL_BURNIN = 2000


def kernel_mode(model: Model) -> int:
    if model.encoding is Encoding.PLUS_MINUS:
        return K.MODE_PM
    kind = model.motif.kind
    modes = {"K2": K.MODE_K2, "K12": K.MODE_K12, "K3": K.MODE_K3}
    if kind not in modes:
        raise ValueError(f"no compiled kernel for motif {model.motif}; use glauber_step")
    return modes[kind]


def derive_seed(master: int, *key: int) -> int:
    """32-bit seed for numba's generator, derived from (master, key)."""
    ss = np.random.SeedSequence(int(master), spawn_key=tuple(int(k) for k in key))
    return int(ss.generate_state(1, dtype=np.uint32)[0])


def is_critical(model: Model) -> bool:
    return abs(model.theta - 0.5) < 1e-9 and bool(np.all(model.beta == 0))


def default_burnin(model: Model) -> int:
    return CRITICAL_BURNIN if is_critical(model) else DEFAULT_BURNIN


def shift_sigma(n: int, theta: float) -> float:
    """Proposal scale for the global phi shift.

    1.5 times the width of f along the 1 direction; the factor was tuned for
    the shortest phi-bar autocorrelation at theta = 1/2, n = 400.
    """
    npairs = n * (n - 1)
    return 1.5 / math.sqrt(npairs * theta * abs(1 - 2 * theta) + math.sqrt(npairs / 2))


def default_shift_moves(model: Model) -> int:
    """Global shift moves per aux cycle; only worth their O(n^2) cost near theta = 1/2."""
    return 1 if model.is_two_star and abs(model.theta - 0.5) < 0.1 else 0


# -- states ------------------------------------------------------------------------

@dataclass
class ChainState:
    graph: Graph
    degrees: np.ndarray
    sum_sq_degrees: int
    seed_lineage: tuple = ()

    @classmethod
    def from_graph(cls, g: Graph, seed_lineage: tuple = ()) -> "ChainState":
        d = degrees(g)
        return cls(g, d, int((d * d).sum()), seed_lineage)

    def check_caches(self) -> bool:
        d = degrees(self.graph)
        return bool(np.array_equal(d, self.degrees) and int((d * d).sum()) == self.sum_sq_degrees)


@dataclass
class AuxState:
    y: Graph
    phi: np.ndarray

    def __post_init__(self):
        if self.y.encoding is not Encoding.PLUS_MINUS:
            raise ValueError("aux state needs a plus-minus graph")
        self.phi = np.asarray(self.phi, dtype=float)
        if self.phi.shape != (self.y.n,) or not np.isfinite(self.phi).all():
            raise ValueError("phi must be a finite vector of length n")


def _rng(rng) -> np.random.Generator:
    return rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)


def glauber_step(state: ChainState, m: Model, rng) -> ChainState:
    """Resample one uniformly chosen pair from its conditional law."""
    rng = _rng(rng)
    g = state.graph
    rows, cols = pair_arrays(g.n)
    e = int(rng.integers(rows.size))
    i, j = int(rows[e]), int(cols[e])
    mean = conditional_edge_mean((i, j), g, m)
    p = 0.5 * (1 + mean) if m.encoding is Encoding.PLUS_MINUS else mean
    present = bool(rng.random() < p)
    if present == bool(g.bits[e]):
        return state
    new = g.with_edge(i, j, present)
    step = 1 if m.encoding is Encoding.ZERO_ONE else 2
    delta = step if present else -step
    d = state.degrees.copy()
    sq = state.sum_sq_degrees - int(d[i] ** 2 + d[j] ** 2)
    d[i] += delta
    d[j] += delta
    sq += int(d[i] ** 2 + d[j] ** 2)
    return ChainState(new, d, sq, state.seed_lineage)


def aux_step(state: AuxState, m: Model, rng) -> AuxState:
    """phi | Y ~ N(k/(n-1), 1/(theta (n-1))), then each Y_ij | phi independently."""
    if not m.is_two_star:
        raise ValueError("aux_step needs the plus-minus two-star model")
    if m.theta <= 0:
        raise ValueError("aux_step needs theta > 0")
    rng = _rng(rng)
    n = m.n
    k = degrees(state.y)
    phi = k / (n - 1) + rng.standard_normal(n) / math.sqrt(m.theta * (n - 1))
    rows, cols = pair_arrays(n)
    p = psi(2 * m.theta * (phi[rows] + phi[cols]) + m.beta[rows] + m.beta[cols])
    bits = (rng.random(rows.size) < p).astype(np.uint8)
    return AuxState(Graph(n, bits, Encoding.PLUS_MINUS), phi)


# -- compiled chains -----------------------------------------------------------------

@dataclass
class Sample:
    index: int
    graph: Graph
    degrees: np.ndarray
    phi: np.ndarray | None = None

    def record(self, model: Model, include_graph: bool = False) -> dict:
        mean = conditional_mean_matrix(self.graph, model)
        rows, cols = pair_arrays(model.n)
        resid = self.graph.values() - mean
        per = np.bincount(rows, resid, model.n) + np.bincount(cols, resid, model.n)
        rec = {"index": self.index, "sum_degrees": int(self.degrees.sum()),
               "max_centered_degree": float(per.max()),
               "phi_bar": float(self.phi.mean()) if self.phi is not None else None}
        if include_graph:
            rec["bitmask"] = format(self.graph.bitmask, "x")
        return rec


class _KernelChain:
    """Mutable compiled-chain state, advanced in explicitly seeded chunks."""

    def __init__(self, kind: str, model: Model, seed: int, moves: int | None = None):
        if kind not in ("glauber", "aux"):
            raise ValueError(f"unknown sampler kind {kind!r}")
        if kind == "aux":
            if not model.is_two_star:
                raise ValueError("the aux sampler needs the plus-minus two-star model")
            if model.theta <= 0:
                raise ValueError("the aux sampler needs theta > 0")
        self.kind = kind
        self.model = model
        self.mode = kernel_mode(model)
        self.seed = int(seed)
        self.calls = 0
        n = model.n
        self.rows, self.cols = pair_arrays(n)
        self.beta = np.ascontiguousarray(model.beta, dtype=float)
        self.a = np.zeros((n, n), dtype=np.int8)
        self.deg = np.zeros(n, dtype=np.int64)
        self.phi = np.zeros(n)
        self.moves = default_shift_moves(model) if moves is None else int(moves)
        self.sigma = shift_sigma(n, model.theta) if model.theta > 0 else 0.0
        K._seed(self._next_seed())
        K.random_init(self.mode, self.a, self.deg)

    def _next_seed(self) -> int:
        self.calls += 1
        return derive_seed(self.seed, self.calls)

    def advance(self, sweeps: int):
        K._seed(self._next_seed())
        if self.kind == "aux":
            K.aux_sweeps(self.a, self.deg, self.phi, self.model.theta, self.beta,
                         sweeps, self.moves, self.sigma)
        else:
            K.glauber_sweeps(self.mode, self.a, self.deg, self.model.theta, self.beta,
                             self.rows, self.cols, sweeps)

    def graph(self) -> Graph:
        return Graph.from_adjacency(self.a, self.model.encoding)


def run_chain(kind: str, model: Model, burnin: int | None = None, n_samples: int = 1,
              thinning: int = 1, seed: int = 0, shift_moves: int | None = None) -> Iterator[Sample]:
    """Yield ``n_samples`` states spaced by ``thinning`` sweeps after ``burnin`` sweeps.

    A sweep is C(n,2) single-pair updates for Glauber, one phi/Y cycle for aux.
    """
    if burnin is None:
        burnin = default_burnin(model)
    if thinning < 1 or n_samples < 1 or burnin < 0:
        raise ValueError("need thinning >= 1, n_samples >= 1 and burnin >= 0")
    chain = _KernelChain(kind, model, seed, shift_moves)
    if burnin:
        chain.advance(burnin)
    for idx in range(n_samples):
        chain.advance(thinning)
        phi = chain.phi.copy() if kind == "aux" else None
        yield Sample(idx, chain.graph(), chain.deg.copy(), phi)


def chain_histogram(kind: str, model: Model, n_steps: int, seed: int, burnin: int = 1000,
                    shift_moves: int = 0) -> np.ndarray:
    """Empirical state frequencies (bitmask order) along one chain; n <= 6."""
    if model.n > MAX_N:
        raise ValueError("state histograms are limited to small n")
    rows, cols = pair_arrays(model.n)
    mode = kernel_mode(model)
    kk = K.KIND_AUX if kind == "aux" else K.KIND_GLAUBER
    sigma = shift_sigma(model.n, model.theta) if model.theta > 0 else 0.0
    counts = K.state_histogram(mode, kk, model.n, model.theta, np.asarray(model.beta, float),
                               rows, cols, int(n_steps), int(burnin), int(shift_moves), sigma,
                               derive_seed(seed, 0))
    return counts / counts.sum()


# -- exact and restricted sampling ---------------------------------------------------------

def exact_samples(model: Model, size: int, rng, restriction: RestrictionEvent | None = None) -> np.ndarray:
    """I.i.d. bitmasks by inverse CDF over the enumerated p.m.f."""
    dist = exact_distribution(model, restriction)
    cdf = np.cumsum(dist.probs)
    u = _rng(rng).random(size) * cdf[-1]
    return np.minimum(np.searchsorted(cdf, u, side="right"), cdf.size - 1)


def exact_sample(model: Model, rng) -> Graph:
    mask = int(exact_samples(model, 1, rng)[0])
    return Graph.from_bitmask(model.n, mask, model.encoding)


class RejectionFailure(RuntimeError):
    def __init__(self, attempts: int, accepted: int, floor: float):
        self.attempts = attempts
        self.accepted = accepted
        super().__init__(f"acceptance {accepted}/{attempts} below floor {floor} for the restriction event")


@dataclass
class RejectionStats:
    attempts: int = 0
    accepted: int = 0

    @property
    def rate(self) -> float:
        return self.accepted / self.attempts if self.attempts else float("nan")


def restricted_sample(model: Model, event: RestrictionEvent, kind: str = "aux", rng=0,
                      max_attempts: int = 1000, floor: float = 0.0, burnin: int | None = None,
                      stats: RejectionStats | None = None) -> Graph:
    """First draw that lands in ``event``; each attempt is an independent draw.

    ``kind="exact"`` draws from the enumerated p.m.f.; chain kinds start a
    fresh chain per attempt (uniform random start, ``burnin`` sweeps).
    """
    rng = _rng(rng)
    stats = stats if stats is not None else RejectionStats()
    for attempt in range(1, max_attempts + 1):
        if kind == "exact":
            g = exact_sample(model, rng)
        else:
            seed = int(rng.integers(2**63))
            g = next(run_chain(kind, model, burnin, 1, 1, seed)).graph
        stats.attempts += 1
        if event.contains_degrees(degrees(g)):
            stats.accepted += 1
            return g
        if floor > 0 and attempt >= 20 and stats.accepted / stats.attempts < floor:
            break
    raise RejectionFailure(stats.attempts, stats.accepted, floor)


# -- dumps --------------------------------------------------------------------------

DUMP_FIELDS = ("index", "sum_degrees", "max_centered_degree", "phi_bar", "bitmask")


def dump_samples(samples, model: Model, fmt: str = "jsonl", include_graph: bool = False) -> str:
    recs = [s.record(model, include_graph) for s in samples]
    if fmt in ("jsonl", "json"):
        return "".join(json.dumps(r) + "\n" for r in recs)
    if fmt == "csv":
        fields = [f for f in DUMP_FIELDS if include_graph or f != "bitmask"]
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
        w.writeheader()
        for r in recs:
            w.writerow({k: ("" if r.get(k) is None else r.get(k)) for k in fields})
        return buf.getvalue()
    raise ValueError(f"unknown dump format {fmt!r}")


def aux_step_tv(model: Model, draws: int, seed: int, shift_moves: int = 0) -> float:
    """TV between p and p K_aux, estimated by pushing exact draws through one cycle.

    Start states are i.i.d. from the enumerated p.m.f.; each gets one compiled
    phi/Y cycle and the end-state histogram is compared with p.
    """
    if not model.is_two_star or model.n > 4:
        raise ValueError("aux_step_tv needs a two-star model with n <= 4")
    dist = exact_distribution(model)
    starts = exact_samples(model, draws, derive_seed(seed, 0)).astype(np.int64)
    rows, cols = pair_arrays(model.n)
    sigma = shift_sigma(model.n, model.theta)
    ends = K.aux_one_step(starts, model.n, model.theta, np.asarray(model.beta, float), rows, cols,
                          int(shift_moves), sigma, derive_seed(seed, 1))
    freq = np.bincount(ends, minlength=dist.probs.size) / draws
    return 0.5 * float(np.abs(freq - dist.probs).sum())
