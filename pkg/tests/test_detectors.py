import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from dcergm import _kernels as K
from dcergm.detectors import (Anchored, Calibrated, DetectorConfig, DetectorKind, Explicit, Schedule,
                              anchored_constant, calibrate_threshold, centered_vertex_sums,
                              cond_centered_max, cond_centered_sum, decide, detector_report,
                              quantile_order_stat, rate, statistic, threshold_from_dict, total_degree)
from dcergm.engine import SamplingPlan, sample_features
from dcergm.graph import Encoding, Graph, n_pairs
from dcergm.model import Model
from dcergm.oracle import exact_distribution
from dcergm.samplers import kernel_mode


def test_sum_on_empty_and_complete():
    n = 7
    assert cond_centered_sum(Graph.empty(n), 0.0, 0.0) == pytest.approx(-n_pairs(n) / 2)
    assert cond_centered_sum(Graph.complete(n), 0.0, 0.0) == pytest.approx(n_pairs(n) / 2)


def test_vertex_sums_on_empty():
    np.testing.assert_allclose(centered_vertex_sums(Graph.empty(6), 0.0, 0.0), -2.5)


def test_vertex_transitive_graph_has_equal_sums():
    cycle = Graph.from_edges(6, [(i, (i + 1) % 6) for i in range(6)], Encoding.PLUS_MINUS)
    v = centered_vertex_sums(cycle, 0.4, 0.1)
    np.testing.assert_allclose(v, v[0], atol=1e-12)
    assert cond_centered_max(cycle, 0.4, 0.1) == pytest.approx(v[3])


def test_planted_hub():
    n = 8
    hub = Graph.from_edges(n, [(0, j) for j in range(1, n)])
    v = centered_vertex_sums(hub, 0.0, 0.0)
    assert v[0] == pytest.approx((n - 1) / 2)
    assert np.argmax(v) == 0 and np.all(v[1:] < v[0])
    assert cond_centered_max(hub, 0.0, 0.0) == pytest.approx((n - 1) / 2)


def test_total_degree_examples():
    n = 6
    assert total_degree(Graph.complete(n, Encoding.PLUS_MINUS)) == n * (n - 1)
    assert total_degree(Graph.empty(n, Encoding.PLUS_MINUS)) == -n * (n - 1)
    balanced = Graph.from_edges(4, [(0, 1), (0, 2), (1, 3)], Encoding.PLUS_MINUS)
    assert total_degree(balanced) == 0


@given(st.integers(3, 9), st.floats(0, 1.2), st.floats(-0.5, 0.5), st.data())
def test_compiled_statistics_match_python(n, theta, beta0, data):
    g = Graph.from_bitmask(n, data.draw(st.integers(0, (1 << n_pairs(n)) - 1)), Encoding.PLUS_MINUS)
    m = Model.two_star(n, theta, beta0)
    out = np.empty((1, K.N_FEATURES))
    a = g.adjacency().astype(np.int8)
    K._record(out, 0, kernel_mode(m), a, a.sum(axis=1).astype(np.int64), np.zeros(0),
              theta, beta0, 2.0, 0.0, -math.inf, True)
    assert out[0, K.F_SUM] == pytest.approx(cond_centered_sum(g, theta, beta0), abs=1e-9)
    assert out[0, K.F_MAX] == pytest.approx(cond_centered_max(g, theta, beta0), abs=1e-9)
    assert out[0, K.F_TOTAL] == total_degree(g)


def test_null_mean_of_sum_matches_exact():
    m = Model.two_star(4, 0.4, 0.0)
    dist = exact_distribution(m)
    sums = np.array([cond_centered_sum(dist.graph(mask), 0.4, 0.0) for mask in range(64)])
    exact = float(dist.probs @ sums)
    batch = sample_features(m, 20000, 1, SamplingPlan(per_chain=500, burnin=50, thinning=1))
    x = batch.column(K.F_SUM)
    means = np.array([x[batch.chain_id == c].mean() for c in np.unique(batch.chain_id)])
    assert abs(x.mean() - exact) < 4 * means.std(ddof=1) / math.sqrt(means.size)


def test_median_threshold_near_zero():
    m = Model.two_star(20, 0.0, 0.0)
    cfg = DetectorConfig("sum", Calibrated(0.5, 2000))
    L = calibrate_threshold(cfg, m, seed=2, plan=SamplingPlan("glauber", per_chain=100, burnin=5))
    # sum has variance C(n,2) at theta = 0
    assert abs(L) < 4 * math.sqrt(n_pairs(20)) * 1.25 / math.sqrt(2000)


def test_schedule_value():
    assert Schedule(1.0, 1.1).value(100) == pytest.approx(100 ** 1.1)
    assert Schedule(2.0, 1.0, 0.5).value(50) == pytest.approx(100 * math.sqrt(math.log(50)))


@pytest.mark.parametrize("stat, L, reject", [(5, 3, True), (3, 3, False), (-1, 0, False)])
def test_decide(stat, L, reject):
    assert decide(stat, L).reject is reject


def test_decide_rejects_nan():
    with pytest.raises(ValueError):
        decide(float("nan"), 0.0)


def test_quantile_order_stat():
    v = np.arange(1, 101)
    assert quantile_order_stat(v, 0.05) == 95
    assert quantile_order_stat(v[::-1], 0.5) == 50
    assert quantile_order_stat([7.0], 0.05) == 7.0


@given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=300), st.floats(0.001, 0.999))
def test_quantile_rejects_at_most_alpha(values, alpha):
    L = quantile_order_stat(values, alpha)
    assert np.mean(np.asarray(values) > L) <= alpha + 1e-12


def test_threshold_dict_roundtrip():
    for th in (Explicit(1.5), Schedule(2.0, 1.1, 0.5), Calibrated(0.1, 500), Anchored(0.05, 300, 80)):
        assert threshold_from_dict(th.to_dict()) == th
    cfg = DetectorConfig("max", Calibrated())
    assert DetectorConfig.from_dict(cfg.to_dict()) == cfg


@pytest.mark.parametrize("bad", [{"mode": "psychic"}, {"mode": "calibrated", "alpha": 1.5},
                                 {"mode": "calibrated", "replications": 10}, {"mode": "schedule", "c": 0, "gamma": 1}])
def test_bad_thresholds(bad):
    with pytest.raises(ValueError):
        threshold_from_dict(bad)


def test_detector_kind_aliases():
    assert DetectorKind.parse("sum") is DetectorKind.COND_CENTERED_SUM
    assert DetectorKind.parse("total_degree") is DetectorKind.TOTAL_DEGREE
    with pytest.raises(ValueError):
        DetectorKind.parse("median")


def test_anchored_constant_scales_rate():
    cfg = DetectorConfig("max", Anchored(0.05, 200))
    vals = np.linspace(0, 10, 200)
    c = anchored_constant(cfg, Model.two_star(50, 0.3, 0.0), 3, 0.2, null_values=vals)
    assert c * rate("max", 50) == pytest.approx(quantile_order_stat(vals, 0.05))


def test_report_fields():
    rep = detector_report(DetectorConfig("sum", Explicit(0.0)), 10, 0.0, 0.0, 0.0,
                          statistic("sum", Graph.complete(10), 0.0, 0.0))
    assert rep["decision"] == "reject" and rep["L_n"] == 0.0


def test_statistic_uses_graph_encoding():
    g = Graph.empty(5, Encoding.PLUS_MINUS)
    assert statistic("sum", g, 0.0, 0.0) == pytest.approx(-n_pairs(5))
