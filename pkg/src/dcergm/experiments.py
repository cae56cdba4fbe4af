"""Risk estimation, phase-diagram sweeps and scaling studies for the two-star model.

Seeds are derived from ``(master seed, n, role, cell index)`` so every cell is
reproducible on its own and independent of evaluation order.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import stats as sps

from . import _kernels as K
from .detectors import (Anchored, Calibrated, DetectorConfig, DetectorKind, Explicit, Schedule,
                        quantile_order_stat, rate)
from .engine import FeatureBatch, SamplingPlan, sample_features
from .fixedpoint import find_t
from .model import AlternativeSpec, Model, Regime, classify_regime, make_beta
from .samplers import derive_seed

ROLE_CAL, ROLE_NULL, ROLE_ALT, ROLE_ANCHOR = 0, 1, 2, 3


def signal_size(n: int, b: float) -> int:
    return max(1, int(round(n ** b)))


def signal_strength(n: int, t: float) -> float:
    return float(n ** t)


@dataclass
class RiskReport:
    type1: float
    type2: float
    risk: float
    reps_null: int
    reps_alt: int
    se_type1: float
    se_type2: float
    se_risk: float
    threshold: float
    provenance: dict = field(default_factory=dict)

    @classmethod
    def from_rejections(cls, null_reject, alt_reject, threshold, provenance) -> "RiskReport":
        null_reject = np.asarray(null_reject, dtype=bool)
        alt_reject = np.asarray(alt_reject, dtype=bool)
        t1 = float(null_reject.mean())
        t2 = float(1 - alt_reject.mean())
        se1 = math.sqrt(t1 * (1 - t1) / null_reject.size)
        se2 = math.sqrt(t2 * (1 - t2) / alt_reject.size)
        return cls(t1, t2, t1 + t2, int(null_reject.size), int(alt_reject.size), se1, se2,
                   math.hypot(se1, se2), float(threshold), provenance)

    def to_dict(self) -> dict:
        return asdict(self)


def _feature_plan(plan: SamplingPlan | None) -> SamplingPlan:
    return plan or SamplingPlan()


def _null(n, theta, beta0) -> Model:
    return Model.two_star(n, theta, np.full(n, float(beta0)))


def _needs_centered(detectors) -> bool:
    return any(d.kind is not DetectorKind.TOTAL_DEGREE for d in detectors)


def _threshold(det: DetectorConfig, n: int, s: int, A: float, cal_values, anchor_values,
               anchor_n: int, anchor_s: int, anchor_A: float) -> float:
    th = det.threshold
    if isinstance(th, Explicit):
        return float(th.value)
    if isinstance(th, Schedule):
        return th.value(n)
    if isinstance(th, Calibrated):
        return quantile_order_stat(cal_values, th.alpha)
    c = quantile_order_stat(anchor_values, th.alpha) / rate(det.kind, anchor_n, anchor_s, anchor_A)
    return c * rate(det.kind, n, s, A)


def estimate_risk(m_null: Model, alt: AlternativeSpec, det: DetectorConfig, reps: int, seed: int,
                  plan: SamplingPlan | None = None, anchor_n: int | None = None) -> RiskReport:
    """Type I / type II errors of one detector against one planted alternative."""
    if reps < 100:
        raise ValueError("risk estimation needs reps >= 100")
    beta0 = m_null.beta0
    if beta0 is None or not m_null.is_two_star:
        raise ValueError("null must be a two-star model with constant beta")
    plan = _feature_plan(plan)
    n, theta = m_null.n, m_null.theta
    alt.validate(n)
    centered = det.kind is not DetectorKind.TOTAL_DEGREE
    col = det.kind.feature
    seeds = {"null": derive_seed(seed, n, ROLE_NULL), "alt": derive_seed(seed, n, ROLE_ALT)}
    cal_values = anchor_values = None
    a_n = anchor_n or n
    th = det.threshold
    if isinstance(th, (Calibrated, Anchored)):
        cal_n = n if isinstance(th, Calibrated) else a_n
        seeds["calibration"] = derive_seed(seed, cal_n, ROLE_CAL)
        vals = sample_features(_null(cal_n, theta, beta0), th.replications, seeds["calibration"], plan,
                               theta, beta0, want_centered=centered).column(col)
        cal_values = anchor_values = vals
    null_vals = sample_features(m_null, reps, seeds["null"], plan, theta, beta0,
                                want_centered=centered).column(col)
    alt_model = m_null.with_beta(make_beta(alt, n))
    alt_vals = sample_features(alt_model, reps, seeds["alt"], plan, theta, beta0,
                               want_centered=centered).column(col)
    s_a, A_a = alt.s, alt.A
    if isinstance(th, Anchored) and a_n != n:
        # carry (s, A) to the anchor size along s = n^b, A = n^t
        if alt.A <= 0:
            raise ValueError("anchored thresholds need A > 0")
        s_a = signal_size(a_n, math.log(alt.s) / math.log(n))
        A_a = signal_strength(a_n, math.log(alt.A) / math.log(n))
    L = _threshold(det, n, alt.s, alt.A, cal_values, anchor_values, a_n, s_a, A_a)
    prov = {"model": m_null.to_dict(), "alternative": {"beta0": alt.beta0, "s": alt.s, "A": alt.A},
            "detector": det.to_dict(), "seed": seed, "derived_seeds": seeds, "plan": plan.to_dict()}
    return RiskReport.from_rejections(null_vals > L, alt_vals > L, L, prov)


# -- phase diagram ----------------------------------------------------------------------

@dataclass
class PhasePoint:
    b: float
    t: float
    n: int
    s: int
    A: float
    regime: Regime
    detector: DetectorKind
    report: RiskReport

    def row(self) -> dict:
        r = self.report
        return {"b": self.b, "t": self.t, "n": self.n, "s": self.s, "A": self.A,
                "regime": self.regime.value, "detector": self.detector.value,
                "type1": r.type1, "type2": r.type2, "risk": r.risk,
                "se_type1": r.se_type1, "se_type2": r.se_type2, "se_risk": r.se_risk,
                "threshold": r.threshold, "reps_null": r.reps_null, "reps_alt": r.reps_alt}


PHASE_COLUMNS = ("b", "t", "n", "s", "A", "regime", "detector", "type1", "type2", "risk",
                 "se_type1", "se_type2", "se_risk", "threshold", "reps_null", "reps_alt")


@dataclass
class PhaseTable:
    points: list[PhasePoint]
    trends: list[dict]
    manifest: dict

    def rows(self) -> list[dict]:
        return [p.row() for p in self.points]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=PHASE_COLUMNS, lineterminator="\n")
        w.writeheader()
        for r in self.rows():
            w.writerow(r)
        return buf.getvalue()

    def trend(self, b: float, t: float, kind) -> dict:
        kind = DetectorKind.parse(kind)
        for tr in self.trends:
            if tr["b"] == b and tr["t"] == t and tr["detector"] == kind.value:
                return tr
        raise KeyError((b, t, kind))


def risk_trend(risks, ses) -> dict:
    risks = [float(r) for r in risks]
    ses = [float(s) for s in ses]
    nonincr = all(risks[i + 1] <= risks[i] + 2 * math.hypot(ses[i], ses[i + 1])
                  for i in range(len(risks) - 1))
    strict = all(risks[i + 1] < risks[i] for i in range(len(risks) - 1))
    return {"risks": risks, "ses": ses, "nonincreasing": nonincr, "strictly_decreasing": strict}


def phase_diagram(cells, n_list, theta: float, beta0: float, detectors, reps: int, seed: int,
                  plan: SamplingPlan | None = None) -> PhaseTable:
    """Risk of every detector at every (b, t) cell and n.

    Per n one calibration batch and one fresh null batch are shared by all
    cells; each cell gets its own alternative batch.  All detector statistics
    are read off the same draws.
    """
    if reps < 100:
        raise ValueError("phase diagram needs reps >= 100")
    cells = [(float(b), float(t)) for b, t in cells]
    for b, t in cells:
        if not (0 < b < 1 and t < 0):
            raise ValueError(f"cell (b={b}, t={t}) needs 0 < b < 1 and t < 0")
    detectors = [d if isinstance(d, DetectorConfig) else DetectorConfig.from_dict(d) for d in detectors]
    n_list = sorted(int(n) for n in n_list)
    plan = _feature_plan(plan)
    regime = classify_regime(theta, beta0)
    centered = _needs_centered(detectors)
    cal_reps = max([d.threshold.replications for d in detectors
                    if isinstance(d.threshold, (Calibrated, Anchored))] or [0])
    anchor_n = {id(d): (d.threshold.anchor_n or n_list[0]) for d in detectors
                if isinstance(d.threshold, Anchored)}
    cal_cache: dict[int, FeatureBatch] = {}

    def calibration(n):
        if n not in cal_cache:
            cal_cache[n] = sample_features(_null(n, theta, beta0), cal_reps,
                                           derive_seed(seed, n, ROLE_CAL), plan, theta, beta0,
                                           want_centered=centered)
        return cal_cache[n]

    points = []
    for n in n_list:
        null_batch = sample_features(_null(n, theta, beta0), reps, derive_seed(seed, n, ROLE_NULL),
                                     plan, theta, beta0, want_centered=centered)
        for ci, (b, t) in enumerate(cells):
            s, A = signal_size(n, b), signal_strength(n, t)
            alt = AlternativeSpec(beta0, s, A)
            alt_model = Model.two_star(n, theta, make_beta(alt, n))
            alt_seed = derive_seed(seed, n, ROLE_ALT, ci)
            alt_batch = sample_features(alt_model, reps, alt_seed, plan, theta, beta0,
                                        want_centered=centered)
            for d in detectors:
                col = d.kind.feature
                cal_vals = anc_vals = None
                a_n = anchor_n.get(id(d), n)
                if isinstance(d.threshold, Calibrated):
                    cal_vals = calibration(n).column(col)
                if isinstance(d.threshold, Anchored):
                    anc_vals = calibration(a_n).column(col)
                L = _threshold(d, n, s, A, cal_vals, anc_vals, a_n, signal_size(a_n, b),
                               signal_strength(a_n, t))
                prov = {"seed": seed, "null_seed": derive_seed(seed, n, ROLE_NULL),
                        "alt_seed": alt_seed, "detector": d.to_dict(), "plan": plan.to_dict(),
                        "ess_null": null_batch.ess(col), "ess_alt": alt_batch.ess(col)}
                rep = RiskReport.from_rejections(null_batch.column(col) > L,
                                                 alt_batch.column(col) > L, L, prov)
                points.append(PhasePoint(b, t, n, s, A, regime, d.kind, rep))
    points.sort(key=lambda p: (p.b, p.t, p.detector.value, p.n))
    trends = []
    for b, t in cells:
        for d in detectors:
            seq = [p for p in points if p.b == b and p.t == t and p.detector is d.kind]
            tr = risk_trend([p.report.risk for p in seq], [p.report.se_risk for p in seq])
            tr.update({"b": b, "t": t, "detector": d.kind.value, "n": [p.n for p in seq]})
            trends.append(tr)
    manifest = {"cells": cells, "n_list": n_list, "theta": theta, "beta0": beta0,
                "regime": regime.value, "detectors": [d.to_dict() for d in detectors],
                "reps": reps, "seed": seed, "plan": plan.to_dict()}
    return PhaseTable(points, trends, manifest)


# -- scaling studies -----------------------------------------------------------------------

def _ols_slope(x, y, y_se):
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    xc = x - x.mean()
    w = xc / np.dot(xc, xc)
    slope = float(np.dot(w, y))
    mc_se = float(math.sqrt(np.dot(w * w, np.square(y_se))))
    resid = y - (y.mean() + slope * xc)
    dof = len(x) - 2
    fit_se = float(math.sqrt(np.dot(resid, resid) / dof / np.dot(xc, xc))) if dof > 0 else 0.0
    return slope, max(mc_se, fit_se), mc_se, fit_se


def _batch_mean_se(x: np.ndarray, chain_id: np.ndarray) -> float:
    """Standard error of the mean treating chains as independent batches."""
    ids = np.unique(chain_id)
    if ids.size < 2:
        return float(x.std(ddof=1) / math.sqrt(x.size))
    means = np.array([x[chain_id == c].mean() for c in ids])
    sizes = np.array([(chain_id == c).sum() for c in ids])
    grand = np.average(means, weights=sizes)
    var = np.sum(sizes ** 2 * (means - grand) ** 2) / (ids.size * (ids.size - 1) * sizes.mean() ** 2)
    return float(math.sqrt(var))


def moment_scaling(theta: float, beta_mode: str, ell: float, n_list, reps: int, seed: int = 0,
                   conditional_on_u: bool = False, plan: SamplingPlan | None = None,
                   tolerance: float = 0.15, min_ess: float = 50.0) -> dict:
    """Fit the slope of log E(mean_i |phi_i - c|^ell) against log n.

    c is phi-bar unconditionally, and the fixed point t on the event U.
    ``beta_mode`` is "zero" (beta = 0) or "corner" (beta = n^(-1/2) 1).
    """
    if not ell > 0:
        raise ValueError("moment order ell must be positive")
    if beta_mode not in ("zero", "corner"):
        raise ValueError("beta_mode must be 'zero' or 'corner'")
    plan = _feature_plan(plan)
    t_fix = find_t(theta) if conditional_on_u else 0.0
    out = []
    for n in sorted(int(v) for v in n_list):
        b0 = 0.0 if beta_mode == "zero" else n ** -0.5
        model = _null(n, theta, b0)
        cut = (n - 1) * t_fix / 2 if conditional_on_u else -math.inf
        batch = sample_features(model, reps, derive_seed(seed, n), plan, theta, b0, ell=ell,
                                center=t_fix, cut=cut, want_centered=False)
        col = K.F_DEV_T if conditional_on_u else K.F_DEV_BAR
        keep = batch.column(K.F_IN_U) > 0.5 if conditional_on_u else np.ones(reps, bool)
        x = batch.column(col)[keep]
        cid = batch.chain_id[keep]
        if x.size < 2:
            out.append({"n": n, "moment": float("nan"), "se": float("nan"), "kept": int(x.size),
                        "ess": 0.0, "low_ess": True})
            continue
        ess = batch.ess(col) * keep.mean()
        out.append({"n": n, "moment": float(x.mean()), "se": _batch_mean_se(x, cid),
                    "kept": int(x.size), "ess": float(ess), "low_ess": bool(ess < min_ess)})
    ok = [r for r in out if np.isfinite(r["moment"]) and r["moment"] > 0]
    slope = se = mc_se = fit_se = float("nan")
    if len(ok) >= 2:
        logs = [math.log(r["moment"]) for r in ok]
        log_se = [r["se"] / r["moment"] for r in ok]
        slope, se, mc_se, fit_se = _ols_slope([math.log(r["n"]) for r in ok], logs, log_se)
    target = -ell / 2
    return {"theta": theta, "beta_mode": beta_mode, "ell": ell, "conditional_on_u": conditional_on_u,
            "per_n": out, "slope": slope, "slope_se": se, "slope_mc_se": mc_se, "slope_fit_se": fit_se,
            "target": target, "pass_bound": bool(slope <= target + tolerance),
            "within_tolerance": bool(abs(slope - target) <= tolerance),
            "low_ess": any(r["low_ess"] for r in out)}


def correlation_scaling(theta: float, beta0: float, n_list, reps: int, seed: int = 0,
                        conditional_on_u: bool = False, plan: SamplingPlan | None = None) -> dict:
    """Pooled Cov(k_1, k_2) and Var(k_1) estimates by n, using exchangeability.

    sum_i Var(k_i) = E sum k_i^2 - (E sum k_i)^2 / n and
    Cov = (Var(sum k_i) - sum_i Var(k_i)) / (n (n - 1)).
    """
    plan = _feature_plan(plan)
    t_fix = find_t(theta) if conditional_on_u else 0.0
    rows = []
    rng = np.random.default_rng(derive_seed(seed, 999))
    for n in sorted(int(v) for v in n_list):
        cut = (n - 1) * t_fix / 2 if conditional_on_u else -math.inf
        if theta == 0:
            model = Model(n, 0.0, np.full(n, float(beta0)), encoding="plus_minus")
            pl = SamplingPlan("glauber", plan.chains, plan.per_chain, plan.burnin, plan.thinning, 0, plan.threads)
        else:
            model = _null(n, theta, beta0)
            pl = plan
        batch = sample_features(model, reps, derive_seed(seed, n), pl, theta, beta0, cut=cut,
                                want_centered=False)
        keep = batch.column(K.F_IN_U) > 0.5 if conditional_on_u else np.ones(reps, bool)
        tot = batch.column(K.F_TOTAL)[keep]
        sq = batch.column(K.F_SUMSQ)[keep]
        cid = batch.chain_id[keep]

        def est(tt, qq):
            sum_var = qq.mean() - tt.mean() ** 2 / n
            var_tot = tt.var()
            return (var_tot - sum_var) / (n * (n - 1)), sum_var / n

        cov, var1 = est(tot, sq)
        boots = []
        ids = np.unique(cid)
        for _ in range(200):
            pick = rng.choice(ids, ids.size)
            idx = np.concatenate([np.flatnonzero(cid == c) for c in pick])
            boots.append(est(tot[idx], sq[idx]))
        boots = np.array(boots)
        rows.append({"n": n, "cov12": float(cov), "cov12_se": float(boots[:, 0].std()),
                     "var1": float(var1), "var1_se": float(boots[:, 1].std()),
                     "cov_over_n": float(cov / n), "kept": int(keep.sum())})
    covs = [r["cov12"] for r in rows]
    ratio_bounded = covs[-1] <= 2 * max(covs[0], 1e-12) if covs else True
    con = [r["cov_over_n"] for r in rows]
    linear = all(0.5 <= con[i + 1] / con[i] <= 2 for i in range(len(con) - 1)) if all(c > 0 for c in con) else False
    return {"theta": theta, "beta0": beta0, "conditional_on_u": conditional_on_u, "per_n": rows,
            "verdict_bounded": bool(ratio_bounded), "verdict_linear": bool(linear)}


# -- criticality ---------------------------------------------------------------------------

QUANTILE_LEVELS = (0.01, 0.05, 0.25, 0.5, 0.75, 0.95, 0.99)


def zeta_reference_quantiles(levels=QUANTILE_LEVELS) -> dict:
    """Quantiles of the density proportional to exp(-z^4/12 - z^2/24), by quadrature."""
    z = np.linspace(-8, 8, 200001)
    dens = np.exp(-z ** 4 / 12 - z ** 2 / 24)
    cdf = np.concatenate([[0], np.cumsum(0.5 * (dens[1:] + dens[:-1]) * np.diff(z))])
    cdf /= cdf[-1]
    return {str(q): float(np.interp(q, cdf, z)) for q in levels}


def _critical_batch(n, reps, seed, plan, beta=None):
    model = Model.two_star(n, 0.5, np.zeros(n) if beta is None else beta)
    return sample_features(model, reps, seed, plan, 0.5, 0.0, want_centered=False)


def critical_fluctuation(n_list, reps: int, seed: int = 0, plan: SamplingPlan | None = None) -> dict:
    """Laws of n^(1/4) phi-bar and n^(-3/2) sum_{i<j} Y_ij at theta = 1/2, beta = 0."""
    plan = _feature_plan(plan)
    per_n = []
    scaled = {}
    for n in sorted(int(v) for v in n_list):
        batch = _critical_batch(n, reps, derive_seed(seed, n), plan)
        phib = batch.column(K.F_PHIBAR) * n ** 0.25
        ysum = batch.column(K.F_TOTAL) / 2 * n ** -1.5
        scaled[n] = phib
        ess = batch.ess(K.F_PHIBAR)
        pos = float((phib > 0).mean())
        per_n.append({"n": n, "phibar_quantiles": {str(q): float(np.quantile(phib, q)) for q in QUANTILE_LEVELS},
                      "ysum_quantiles": {str(q): float(np.quantile(ysum, q)) for q in QUANTILE_LEVELS},
                      "median": float(np.median(phib)), "fraction_positive": pos,
                      "sign_symmetric": bool(abs(pos - 0.5) <= 3 * 0.5 / math.sqrt(max(ess, 1))),
                      "ess": float(ess), "shift_acceptance": batch.shift_acceptance})
    ns = sorted(scaled)
    ks = [{"n_pair": [a, b], "ks": float(sps.ks_2samp(scaled[a], scaled[b]).statistic)}
          for a, b in zip(ns[:-1], ns[1:])]
    return {"per_n": per_n, "ks_consecutive": ks, "zeta_reference": zeta_reference_quantiles(),
            "max_ks": max((k["ks"] for k in ks), default=0.0)}


def alt_mean_shift_at_criticality(b: float, t: float, n_list, reps: int, seed: int = 0,
                                  plan: SamplingPlan | None = None, control: bool = True) -> dict:
    """Fraction of replicates with tanh(phi-bar) <= n^(-1/4) under the planted alternative."""
    plan = _feature_plan(plan)
    rows = []
    for n in sorted(int(v) for v in n_list):
        s, A = signal_size(n, b), signal_strength(n, t)
        beta = make_beta(AlternativeSpec(0.0, s, A), n)
        batch = _critical_batch(n, reps, derive_seed(seed, n, ROLE_ALT), plan, beta)
        frac = float((np.tanh(batch.column(K.F_PHIBAR)) <= n ** -0.25).mean())
        row = {"n": n, "s": s, "A": A, "fraction": frac, "se": math.sqrt(frac * (1 - frac) / reps)}
        if control:
            cb = _critical_batch(n, reps, derive_seed(seed, n, ROLE_NULL), plan)
            cf = float((np.tanh(cb.column(K.F_PHIBAR)) <= n ** -0.25).mean())
            row.update({"control_fraction": cf, "control_se": math.sqrt(cf * (1 - cf) / reps)})
        rows.append(row)
    fr = [r["fraction"] for r in rows]
    return {"b": b, "t": t, "detectable": bool(b + t + 0.5 > 0), "per_n": rows,
            "decreasing": bool(all(fr[i + 1] < fr[i] for i in range(len(fr) - 1)))}


# -- concentration envelope -------------------------------------------------------------------

def concentration_envelope(theta: float = 0.3, beta0: float = 0.0, n_fit: int = 100,
                           n_check=(200, 400), reps: int = 4000, seed: int = 0,
                           probes=None, plan: SamplingPlan | None = None, min_events: int = 20) -> dict:
    """Fit P(|S| > x) <= 2 exp(-x^2 / (lambda N)) at n_fit, check it at n_check.

    S is the conditionally centered sum, N = C(n, 2).  Probes are given in
    standardized units u = x / sqrt(N); by default 16 points from 0.25 up to
    the largest u with at least ``min_events`` exceedances at n_fit.
    """
    plan = _feature_plan(plan)

    def tails(n):
        batch = sample_features(_null(n, theta, beta0), reps, derive_seed(seed, n), plan, theta, beta0)
        npairs = n * (n - 1) / 2
        return np.abs(batch.column(K.F_SUM)) / math.sqrt(npairs)

    u_fit = tails(n_fit)
    if probes is None:
        top = np.sort(u_fit)[-min_events]
        probes = np.linspace(0.25, top, 16)
    probes = np.asarray(probes, float)
    p_fit = np.array([(u_fit > u).mean() for u in probes])
    usable = p_fit > 0
    lam = float(np.max(probes[usable] ** 2 / np.log(2 / p_fit[usable])))
    checks = []
    for n in n_check:
        un = tails(n)
        for u in probes:
            p = float((un > u).mean())
            env = float(min(1.0, 2 * math.exp(-u * u / lam)))
            checks.append({"n": n, "u": float(u), "tail": p, "envelope": env, "violation": bool(p > env)})
    frac = float(np.mean([c["violation"] for c in checks])) if checks else 0.0
    return {"theta": theta, "beta0": beta0, "n_fit": n_fit, "lambda_hat": lam,
            "fit_tails": [{"u": float(u), "tail": float(p)} for u, p in zip(probes, p_fit)],
            "checks": checks, "violation_fraction": frac, "pass": bool(frac <= 0.10)}


def to_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=_json_default)


def _json_default(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    if hasattr(o, "value"):
        return o.value
    raise TypeError(f"not serializable: {type(o)}")
