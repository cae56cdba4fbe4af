"""Acceptance criteria 1-10.

Each test records one PASS/FAIL line (printed at the end of the session by
conftest.py) and then asserts the criterion at its stated tolerance.
"""
import time

import numpy as np
import pytest

from dcergm.detectors import Anchored, Calibrated, DetectorConfig, quantile_order_stat
from dcergm.engine import SamplingPlan, sample_features
from dcergm.experiments import (concentration_envelope, critical_fluctuation, moment_scaling,
                                phase_diagram)
from dcergm.graph import pair_arrays
from dcergm.model import Model, psi
from dcergm.motifs import K3, K12
from dcergm.oracle import (aux_joint_check, aux_kernel_quadrature, exact_distribution, exact_moments,
                           glauber_kernel, lb_bound_check, lr_second_moment, stationarity_defect)
from dcergm.samplers import aux_step_tv, chain_histogram, derive_seed

RESULTS: dict[int, str] = {}

CRITICAL_PLAN = SamplingPlan(per_chain=250, burnin=300, thinning=4)
THETA1_PLAN = SamplingPlan(per_chain=250, burnin=200, thinning=4)


def record(k: int, ok: bool, detail: str, elapsed: float, budget: float) -> bool:
    ok = ok and elapsed < budget
    RESULTS[k] = f"criterion {k:>2}: {'PASS' if ok else 'FAIL'}  {detail}  [{elapsed:.1f}s / {budget:.0f}s]"
    print(RESULTS[k])
    return ok


def tv(p, q):
    return 0.5 * float(np.abs(np.asarray(p) - np.asarray(q)).sum())


def test_criterion_01_oracle_factorization():
    t0 = time.time()
    rng = np.random.default_rng(1)
    worst_mean = worst_cov = 0.0
    grids = 0
    for n in (2, 3, 4, 5):
        rows, cols = pair_arrays(n)
        beta_grid = [np.zeros(n), np.full(n, 1.3), np.full(n, -2.0), np.linspace(-1, 1, n)]
        beta_grid += [rng.normal(0, 1.5, n) for _ in range(6)]
        for beta in beta_grid:
            mom = exact_moments(exact_distribution(Model.general(n, 0.0, beta, K12)))
            worst_mean = max(worst_mean, float(np.abs(mom.edge_mean - psi(beta[rows] + beta[cols])).max()))
            off = mom.edge_cov - np.diag(np.diag(mom.edge_cov))
            worst_cov = max(worst_cov, float(np.abs(off).max()))
            grids += 1
    ok = worst_mean < 1e-12 and worst_cov < 1e-12
    assert record(1, ok, f"{grids} beta grids, max |marginal err| {worst_mean:.1e}, max |cov| {worst_cov:.1e}",
                  time.time() - t0, 10)


def test_criterion_02_sampler_correctness():
    t0 = time.time()
    m = Model.two_star(4, 0.4, 0.1)
    p = exact_distribution(m).probs
    tv_g = tv(chain_histogram("glauber", m, 10**6, seed=21), p)
    tv_a = tv(chain_histogram("aux", m, 10**6, seed=22), p)
    ok = tv_g < 0.02 and tv_a < 0.02
    assert record(2, ok, f"TV glauber {tv_g:.4f}, aux {tv_a:.4f} (< 0.02, 1e6 steps)", time.time() - t0, 60)


def test_criterion_03_kernel_invariance():
    t0 = time.time()
    models = [Model.two_star(n, th, b) for n in (2, 3, 4) for th in (0.0, 0.4, 0.8) for b in (0.0, 0.2)]
    models += [Model.two_star(4, 0.5, [0.3, -0.1, 0.0, 0.2])]
    models += [Model.general(n, th, -0.3, motif) for n in (3, 4) for th in (0.0, 1.1) for motif in (K12, K3)]
    glauber = max(stationarity_defect(exact_distribution(m), glauber_kernel(m)) for m in models)
    aux_models = [Model.two_star(2, 0.7, [0.2, -0.1]), Model.two_star(2, 0.5, 0.0)]
    quad = max(tv(exact_distribution(m).probs @ aux_kernel_quadrature(m), exact_distribution(m).probs)
               for m in aux_models)
    mc = max(aux_step_tv(Model.two_star(3, 0.6, 0.1), 10**6, 31),
             aux_step_tv(Model.two_star(4, 0.4, 0.0), 10**6, 32),
             aux_step_tv(Model.two_star(4, 0.5, 0.0), 10**6, 33, shift_moves=1))
    ok = glauber < 1e-10 and quad < 0.02 and mc < 0.02
    assert record(3, ok, f"glauber defect {glauber:.1e} over {len(models)} models, aux TV quadrature "
                         f"{quad:.1e}, Monte Carlo {mc:.4f}", time.time() - t0, 120)


def test_criterion_04_aux_representation():
    t0 = time.time()
    cases = [(2, 1.0, 0.0), (2, 0.5, [0.3, -0.4]), (2, 2.0, 0.1), (3, 0.7, [0.1, 0.0, 0.0]),
             (3, 0.5, 0.0), (3, 1.3, [-0.2, 0.3, 0.5])]
    reps = [aux_joint_check(n, th, b, np.linspace(-3, 3, 25 if n == 2 else 13)) for n, th, b in cases]
    worst = max(r["max_relative_discrepancy"] for r in reps)
    cond = max(r["conditional_max_abs_error"] for r in reps)
    ok = worst < 1e-8 and all(r["pass"] for r in reps)
    assert record(4, ok, f"max relative ratio spread {worst:.1e}, conditional err {cond:.1e} over "
                         f"{len(cases)} grids", time.time() - t0, 60)


def test_criterion_05_lr_second_moment():
    t0 = time.time()
    worst = 0.0
    for n in (2, 3, 4, 5):
        for s in (1, 2):
            if s >= n:
                continue
            for A in (0.0, 0.1, 0.5):
                for th in (0.0, 0.4, 0.8):
                    for b0 in (0.0, 0.2, -0.2):
                        a = lr_second_moment(n, s, A, th, b0, method="ratio")
                        b = lr_second_moment(n, s, A, th, b0, method="direct")
                        worst = max(worst, abs(a - b))
    bound = [lb_bound_check(n, s, A, th, b0)
             for n in (3, 4, 5) for s in (1, 2) if n > 2 * s
             for A in (0.0, 0.1, 0.2, 0.5) for th in (0.4, 0.8) for b0 in (0.0, 0.2, -0.2)]
    holds = sum(r["holds"] for r in bound)
    ok = worst < 1e-10 and holds == len(bound)
    assert record(5, ok, f"dual-path max diff {worst:.1e}; bound holds {holds}/{len(bound)}",
                  time.time() - t0, 120)


@pytest.mark.slow
def test_criterion_06_calibrated_type_one():
    t0 = time.time()
    m = Model.two_star(200, 0.3, 0.0)
    cal = sample_features(m, 2000, derive_seed(6, 0), THETA1_PLAN, 0.3, 0.0)
    fresh = sample_features(m, 2000, derive_seed(6, 1), THETA1_PLAN, 0.3, 0.0)
    rates = {}
    for kind in ("sum", "max", "total"):
        cfg = DetectorConfig(kind, Calibrated(0.05, 2000))
        L = quantile_order_stat(cal.column(cfg.kind.feature), 0.05)
        rates[kind] = float((fresh.column(cfg.kind.feature) > L).mean())
    ok = all(0.02 <= r <= 0.09 for r in rates.values())
    detail = ", ".join(f"{k} {v:.3f}" for k, v in rates.items())
    assert record(6, ok, f"fresh type I: {detail} (in [0.02, 0.09])", time.time() - t0, 300)


@pytest.fixture(scope="module")
def phase_tables():
    t0 = time.time()
    sum_a = DetectorConfig("sum", Anchored(0.05, 2000))
    max_a = DetectorConfig("max", Anchored(0.05, 2000))
    total_c = DetectorConfig("total", Calibrated(0.05, 2000))
    theta1 = phase_diagram([(0.75, -0.25), (0.3, -0.4)], [100, 200, 400], 0.3, 0.0, [sum_a, max_a],
                           1000, 7, THETA1_PLAN)
    theta3 = phase_diagram([(0.6, -0.9)], [100, 200, 400], 0.5, 0.0, [sum_a, max_a, total_c],
                           1000, 7, CRITICAL_PLAN)
    return theta1, theta3, time.time() - t0


def _risk_at(tr, n):
    return tr["risks"][tr["n"].index(n)]


@pytest.mark.slow
def test_criterion_07_phase_directions(phase_tables):
    theta1, theta3, elapsed = phase_tables
    i = theta1.trend(0.75, -0.25, "sum")
    ii = theta1.trend(0.3, -0.4, "max")
    iii = theta3.trend(0.6, -0.9, "total")
    iii_sum, iii_max = theta3.trend(0.6, -0.9, "sum"), theta3.trend(0.6, -0.9, "max")
    ok_i = i["strictly_decreasing"] and _risk_at(i, 400) < 0.5
    ok_ii = ii["nonincreasing"] and _risk_at(ii, 400) < 0.7
    ok_iii = (iii["nonincreasing"] and _risk_at(iii, 400) < 0.7
              and _risk_at(iii_sum, 400) > 0.8 and _risk_at(iii_max, 400) > 0.8)

    def fmt(tr):
        return "/".join(f"{r:.3f}" for r in tr["risks"])

    detail = (f"(i) {'ok' if ok_i else 'FAIL'} sum {fmt(i)}; (ii) {'ok' if ok_ii else 'FAIL'} max {fmt(ii)}; "
              f"(iii) {'ok' if ok_iii else 'FAIL'} total {fmt(iii)}, sum {fmt(iii_sum)}, max {fmt(iii_max)}")
    assert record(7, ok_i and ok_ii and ok_iii, detail, elapsed, 1800)


@pytest.mark.slow
def test_criterion_08_moment_scaling():
    t0 = time.time()
    r = moment_scaling(0.5, "zero", 2.0, [50, 100, 200, 400, 800], 400, seed=8, plan=CRITICAL_PLAN)
    ok = abs(r["slope"] - (-1.0)) <= 0.15
    assert record(8, ok, f"slope {r['slope']:.3f} +- {r['slope_se']:.3f} (target -1 +- 0.15)",
                  time.time() - t0, 600)


@pytest.mark.slow
def test_criterion_09_critical_fluctuations():
    t0 = time.time()
    r = critical_fluctuation([200, 400, 800], 2500, seed=9, plan=CRITICAL_PLAN)
    ks = [k["ks"] for k in r["ks_consecutive"]]
    sym = [row["sign_symmetric"] for row in r["per_n"]]
    med = [row["median"] for row in r["per_n"]]
    ok = max(ks) < 0.1 and all(sym)
    detail = (f"KS {', '.join(f'{k:.3f}' for k in ks)} (< 0.1); medians "
              f"{', '.join(f'{m:+.3f}' for m in med)}, sign-symmetric {sym}")
    assert record(9, ok, detail, time.time() - t0, 600)


@pytest.mark.slow
def test_criterion_10_concentration_envelope():
    t0 = time.time()
    r = concentration_envelope(theta=0.3, beta0=0.0, n_fit=100, n_check=(200, 400), reps=4000, seed=10,
                               plan=THETA1_PLAN)
    ok = r["violation_fraction"] <= 0.10
    assert record(10, ok, f"lambda_hat {r['lambda_hat']:.3f}, violations {r['violation_fraction']:.3f} "
                          f"of {len(r['checks'])} probes (<= 0.10)", time.time() - t0, 600)
