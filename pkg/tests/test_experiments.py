import itertools
import math

import numpy as np
import pytest

from irrsobol.construct import SequenceSpec, build_sequence
from irrsobol.experiments import (
    EstimateResult,
    F1Integrand,
    QueueIntegrand,
    QueueModel,
    RqmcConfig,
    f1,
    f1_alphas,
    mc_estimate,
    overflow_stream,
    queue_counts,
    queue_wait_count,
    queue_wait_count_events,
    rqmc_estimate,
)
from irrsobol.points import PointGenerator


@pytest.mark.parametrize("variant", ["i", "ii"])
@pytest.mark.parametrize("s", [1, 5, 20])
def test_f1_center(variant, s):
    a = f1_alphas(s, variant)
    assert f1(np.full(s, 0.5), variant) == pytest.approx(np.prod(a / (1 + a)))


def test_f1_examples():
    assert f1(np.array([0.0]), "i") == 1.5
    assert list(f1_alphas(4, "ii")) == [4, 3, 2, 1]
    with pytest.raises(ValueError):
        f1(np.zeros(3), "iii")


@pytest.mark.parametrize("variant", ["i", "ii"])
def test_f1_integrates_to_one(variant):
    # midpoint rule on a product grid is exact for each piecewise-linear factor
    g = (np.arange(8) + 0.5) / 8
    pts = np.array(list(itertools.product(g, repeat=3)))
    assert f1(pts, variant).mean() == pytest.approx(1.0, abs=1e-12)


def _inverse(minutes, mean):
    return 1 - math.exp(-minutes / mean)


def test_queue_constant_stream_never_waits():
    m = QueueModel(T=30)
    ua, us = _inverse(1.0, 1.0), _inverse(55 / 60, 55 / 60)
    count, L = queue_wait_count(itertools.cycle([ua, us]), m)
    assert count == 0 and L == 30


def test_queue_zero_horizon():
    assert queue_wait_count(iter([0.5, 0.5]), QueueModel(T=0)) == (0, 0)


def test_queue_rejects_one():
    with pytest.raises(ValueError):
        queue_wait_count(iter([1.0, 0.5]), QueueModel(T=10))


def test_queue_model_validation():
    with pytest.raises(ValueError):
        QueueModel(service_mean=0)
    assert QueueModel(T=100).default_dim() == 2 * 140


def test_queue_lindley_matches_event_simulation():
    rng = np.random.default_rng(2024)
    for T in (10, 100, 1000):
        m = QueueModel(T=T)
        for _ in range(20):
            u = rng.random(2 * T + 400)
            assert queue_wait_count(u, m) == queue_wait_count_events(u, m)


def test_queue_heavy_traffic_has_waits():
    rng = np.random.default_rng(1)
    m = QueueModel(T=2000, service_mean=0.99)
    count, L = queue_wait_count(rng.random(6000), m)
    assert count > 0 and count < L


def test_vectorized_matches_scalar_with_overflow():
    m = QueueModel(T=50)
    rng = np.random.default_rng(9)
    x = rng.random((40, 70))  # 35 clients of coordinates; overflow is common
    count, L, over = queue_counts(x, m, seed=5, replication=2, start=100)
    assert over > 0
    for k in range(40):
        stream = itertools.chain(x[k], overflow_stream(5, 2, 100 + k))
        assert (count[k], L[k]) == queue_wait_count(stream, m)


def test_vectorized_without_overflow():
    m = QueueModel(T=20)
    x = np.random.default_rng(3).random((30, 2 * m.default_dim()))
    count, L, over = queue_counts(x, m)
    assert over == 0
    for k in range(30):
        assert (count[k], L[k]) == queue_wait_count(x[k], m)


def test_rqmc_config_validation():
    with pytest.raises(ValueError):
        RqmcConfig(replications=1).validate()
    with pytest.raises(ValueError):
        RqmcConfig(m_min=5, m_max=4).validate()


@pytest.fixture(scope="module")
def gen20():
    return PointGenerator(build_sequence(SequenceSpec(dim=20, ordering="alternative")))


def test_constant_integrand(gen20):
    res = rqmc_estimate(lambda x, r, s: np.ones(len(x)), gen20, RqmcConfig(replications=4, m_min=3, m_max=5), exact=1.0)
    assert all(r.variance == 0 and r.rmse == 0 and r.mean == 1 for r in res.rows)


def test_rqmc_prefix_means_match_direct(gen20):
    cfg = RqmcConfig(replications=3, m_min=4, m_max=9, chunk=50, seed=8)
    res = rqmc_estimate(F1Integrand("i"), gen20, cfg)
    for r in range(3):
        g = gen20.apply_shift(8, replication=r)
        for i, m in enumerate(cfg.ms):
            assert res.replicate_means[r, i] == pytest.approx(f1(g.block(m), "i").mean(), rel=1e-13)


def test_rqmc_threads_deterministic(gen20):
    a = rqmc_estimate(F1Integrand(), gen20, RqmcConfig(replications=6, m_min=6, m_max=9, threads=1))
    b = rqmc_estimate(F1Integrand(), gen20, RqmcConfig(replications=6, m_min=6, m_max=9, threads=3))
    assert np.array_equal(a.replicate_means, b.replicate_means)


def test_rqmc_unbiased_over_shifts(gen20):
    res = rqmc_estimate(F1Integrand("ii"), gen20, RqmcConfig(replications=100, m_min=4, m_max=4, seed=1))
    means = res.replicate_means[:, 0]
    se = means.std(ddof=1) / math.sqrt(len(means))
    assert abs(means.mean() - 1.0) < 3 * se


def test_rqmc_beats_mc_at_2_14(gen20):
    cfg = RqmcConfig(replications=10, m_min=14, m_max=14)
    q = rqmc_estimate(F1Integrand("ii"), gen20, cfg).rows[0]
    mc = mc_estimate(F1Integrand("ii"), 20, cfg).rows[0]
    assert q.variance < mc.variance


def test_mc_slope():
    res = mc_estimate(F1Integrand("ii"), 20, RqmcConfig(replications=25, m_min=8, m_max=16, seed=4))
    assert -0.6 <= res.slope() <= -0.4


def test_queue_rqmc_runs_and_counts_overflow():
    m = QueueModel(T=40)
    gen = PointGenerator(build_sequence(SequenceSpec(dim=40), 32, 32))  # too few coordinates
    integrand = QueueIntegrand(m, seed=2, quantity="L")
    res = rqmc_estimate(integrand, gen, RqmcConfig(replications=4, m_min=4, m_max=6))
    assert res.extras["overflow_points"] > 0
    assert all(r.rmse is not None for r in res.rows)


def test_result_rows_are_plot_ready(gen20):
    res = rqmc_estimate(F1Integrand(), gen20, RqmcConfig(replications=3, m_min=2, m_max=4))
    assert isinstance(res, EstimateResult)
    d = res.row(3).to_dict()
    assert set(d) == {"method", "m", "n", "mean", "variance", "rmse", "overflow"} and d["n"] == 8
