import math

import numpy as np
import pytest
from scipy import stats

from crtraffic.errors import DomainError
from crtraffic.montecarlo import (
    Hypothesis,
    estimate,
    frame_outcomes,
    sample_detector_statistic,
    sample_detector_statistics,
    sample_trajectories,
    sample_trajectory,
    signal_samples,
    simulate_transmission,
)
from crtraffic.sensing import ChannelModel, pd_h11, pf_h01, solve_threshold
from crtraffic.specfun import marcum_q
from crtraffic.throughput import local_busy, local_h11, local_idle, throughput_components
from crtraffic.traffic import SystemGeometry, TrafficModel, hypothesis_probabilities, transition_matrix
from oracles import enumerate_single_transition


def _z(count, total, p):
    return (count / total - p) / math.sqrt(p * (1 - p) / total)


def _rng(seed=0):
    return np.random.default_rng(seed)


TOY = SystemGeometry.from_samples(2, 6, t_samp=0.05)
TOY_TRAFFIC = TrafficModel(1.0, 2.0)


def test_exact_mode_hypothesis_frequencies():
    hp = hypothesis_probabilities(TOY_TRAFFIC, TOY)
    total = hp.p_h11 + hp.p_h12 + hp.p_h01 + hp.p_h02
    batch = sample_trajectories(TOY_TRAFFIC, TOY, _rng(1), 100_000, "exact")
    for h, p in [(Hypothesis.H11, hp.p_h11), (Hypothesis.H12, hp.p_h12), (Hypothesis.H01, hp.p_h01), (Hypothesis.H02, hp.p_h02)]:
        assert abs(_z(np.count_nonzero(batch.hypothesis == h), 100_000, p / total)) < 3
    assert not np.any(batch.hypothesis == Hypothesis.MULTI)


def test_chain_mode_multi_transition_frequency():
    tm = transition_matrix(TOY_TRAFFIC, TOY.t_samp).as_array()
    ref = enumerate_single_transition(TOY_TRAFFIC.stationary_busy, tm, TOY.n_sense, TOY.m_frame)
    batch = sample_trajectories(TOY_TRAFFIC, TOY, _rng(2), 100_000, "chain")
    assert abs(_z(np.count_nonzero(batch.hypothesis == Hypothesis.MULTI), 100_000, ref["multi"])) < 3
    assert abs(_z(np.count_nonzero(batch.hypothesis == Hypothesis.H12), 100_000, ref["h12"])) < 3


def test_chain_mode_busy_class_matches_exact_labels():
    batch = sample_trajectories(TOY_TRAFFIC, TOY, _rng(3), 20_000, "chain")
    single = batch.hypothesis != Hypothesis.MULTI
    labelled_busy = np.isin(batch.hypothesis, [Hypothesis.H11, Hypothesis.H12])
    np.testing.assert_array_equal(batch.busy_class[single], labelled_busy[single])


def test_quiet_traffic_gives_constant_trajectories(geom):
    quiet = TrafficModel(1e-9, 2e-9)
    for mode in ("exact", "chain"):
        batch = sample_trajectories(quiet, geom, _rng(4), 50_000, mode)
        assert set(np.unique(batch.busy_sensing)) <= {0, geom.n_sense}
        assert abs(_z(np.count_nonzero(batch.busy_class), 50_000, quiet.stationary_busy)) < 3


def test_sample_trajectory_shape_and_labels():
    for mode in ("exact", "chain"):
        rng = _rng(5)
        for _ in range(200):
            states, hyp, change = sample_trajectory(TOY_TRAFFIC, TOY, rng, mode)
            assert states.shape == (TOY.m_frame + 1,)
            if hyp != Hypothesis.MULTI:
                assert 0 <= change < TOY.m_frame
                assert int(states[1 : TOY.n_sense + 1].sum()) == signal_samples(hyp, change, TOY.n_sense)
            assert (hyp in (Hypothesis.H11, Hypothesis.H12)) == bool(states[TOY.n_sense + 1]) or hyp == Hypothesis.MULTI


def test_unknown_mode(geom, traffic):
    with pytest.raises(DomainError):
        sample_trajectories(traffic, geom, _rng(), 10, "bogus")


def test_signal_samples():
    assert signal_samples(Hypothesis.H11, 0, 50) == 50
    assert signal_samples(Hypothesis.H12, 10, 50) == 40
    assert signal_samples(Hypothesis.H02, 20, 50) == 20
    assert signal_samples(Hypothesis.H01, 0, 50) == 0
    with pytest.raises(DomainError):
        signal_samples(Hypothesis.MULTI, 3, 50)


def test_noise_only_statistic_matches_false_alarm(geom, channel):
    stat = sample_detector_statistics(np.zeros(100_000, dtype=int), channel, geom, _rng(6))
    assert abs(_z(np.count_nonzero(stat > 50.0), 100_000, pf_h01(25, 50.0))) < 3


def test_full_presence_statistic_matches_detection(geom, channel):
    eta = 80.0
    stat = sample_detector_statistics(np.full(100_000, geom.n_sense), channel, geom, _rng(7))
    assert abs(_z(np.count_nonzero(stat > eta), 100_000, pd_h11(25, eta, channel.gamma_bar_p))) < 3


def test_statistic_given_snr_matches_marcum(geom):
    # conditioned on gamma the statistic is the bare noncentral chi-square
    rng = _rng(8)
    for gamma, eta in [(0.5, 60.0), (2.0, 120.0), (3.1623, 200.0)]:
        draws = rng.noncentral_chisquare(2 * geom.u, geom.n_sense * gamma, size=100_000)
        p = marcum_q(geom.u, math.sqrt(geom.n_sense * gamma), math.sqrt(eta))
        assert abs(_z(np.count_nonzero(draws > eta), 100_000, p)) < 3


def test_single_statistic_is_nonnegative(geom, channel):
    rng = _rng(9)
    for hyp, change in [(Hypothesis.H11, 0), (Hypothesis.H12, 50), (Hypothesis.H02, 7), (Hypothesis.H01, 0)]:
        assert sample_detector_statistic(hyp, change, channel, geom, rng) >= 0


def test_transmission_noiseless_idle(geom, constraint):
    out = simulate_transmission(np.zeros(1000, dtype=int), ChannelModel(sigma_sr_sq=1e-300), constraint, geom, _rng(10))
    np.testing.assert_array_equal(out, geom.transmit_fraction * constraint.rate_floor)


def _mean_z(x, target):
    return (x.mean() - target) / (x.std(ddof=1) / math.sqrt(x.size))


def test_transmission_means(geom, channel, constraint):
    frac, n, m = geom.transmit_fraction, geom.n_sense, geom.m_frame
    busy = simulate_transmission(np.full(100_000, m - n), channel, constraint, geom, _rng(11))
    assert abs(_mean_z(busy, frac * local_busy(channel, constraint))) < 3
    idle = simulate_transmission(np.zeros(100_000, dtype=int), channel, constraint, geom, _rng(12))
    assert abs(_mean_z(idle, frac * local_idle(channel, constraint))) < 3
    d = (n + m) // 2
    mid = simulate_transmission(np.full(100_000, d - n), channel, constraint, geom, _rng(13))
    assert abs(_mean_z(mid, frac * local_h11(d, geom, channel, constraint))) < 3


def test_frame_outcome_invariants(geom, traffic, channel, constraint):
    bound = geom.transmit_fraction * constraint.rate_floor
    for f in frame_outcomes(traffic, geom, channel, constraint, 64.7, 2000, seed=14):
        assert f.transmitted == (not f.decision_busy)
        assert 0.0 <= f.throughput_contribution <= bound
        if not f.transmitted:
            assert f.throughput_contribution == 0.0
        assert f.detector_statistic >= 0.0


def test_single_frame_has_no_standard_errors(geom, traffic, channel, constraint):
    est = estimate(traffic, geom, channel, constraint, 64.7, 1, seed=0)
    assert est.std_errors["r_total"] is None
    assert est.std_errors["outage"] is None
    assert (est.avg_pd_hat is None) != (est.avg_pf_hat is None)
    assert est.std_errors["avg_pd"] is None and est.std_errors["avg_pf"] is None


def test_estimate_rejects_bad_input(geom, traffic, channel, constraint):
    with pytest.raises(DomainError):
        estimate(traffic, geom, channel, constraint, 64.7, 0, seed=0)
    with pytest.raises(DomainError):
        estimate(traffic, geom, channel, constraint, 64.7, 10, seed=0, mode="bogus")


def _zs(est, report):
    pairs = [
        (est.avg_pd_hat, report.avg_pd, "avg_pd"),
        (est.avg_pf_hat, report.avg_pf, "avg_pf"),
        (est.r_hat, report.r_total, "r_total"),
        (est.outage_hat, report.outage, "outage"),
    ]
    return [(got - ref) / est.std_errors[key] for got, ref, key in pairs]


def test_exact_mode_matches_analytic_over_seeds(geom, traffic, channel, constraint):
    eta = solve_threshold(traffic, geom, channel, 0.9)
    report = throughput_components(traffic, geom, channel, constraint, eta)
    passed = 0
    for seed in range(20):
        est = estimate(traffic, geom, channel, constraint, eta, 100_000, seed)
        passed += all(abs(z) <= 3 for z in _zs(est, report))
    assert passed / 20 >= 0.99


def test_exact_mode_z_scores_are_standard_normal(geom, traffic, channel, constraint):
    eta = solve_threshold(traffic, geom, channel, 0.9)
    report = throughput_components(traffic, geom, channel, constraint, eta)
    zs = np.array([_zs(estimate(traffic, geom, channel, constraint, eta, 100_000, 1000 + s), report) for s in range(400)])
    # outage is an affine image of r_total, so three independent columns
    for column in zs[:, :3].T:
        assert stats.kstest(column, "norm").pvalue > 0.01
    assert np.mean(np.all(np.abs(zs) <= 3, axis=1)) >= 0.98


def test_chain_agrees_with_exact_at_low_traffic(geom, traffic, channel, constraint):
    eta = 64.7
    a = estimate(traffic, geom, channel, constraint, eta, 100_000, 21, "exact")
    b = estimate(traffic, geom, channel, constraint, eta, 100_000, 22, "chain")
    for key, x, y in [("avg_pd", a.avg_pd_hat, b.avg_pd_hat), ("avg_pf", a.avg_pf_hat, b.avg_pf_hat), ("r_total", a.r_hat, b.r_hat)]:
        joint = math.hypot(a.std_errors[key], b.std_errors[key])
        assert abs(x - y) <= 3 * joint


def test_chain_and_exact_diverge_at_high_traffic(geom, channel, constraint):
    busy = TrafficModel(100.0, 100.0)
    eta = 64.7
    a = estimate(busy, geom, channel, constraint, eta, 100_000, 23, "exact")
    b = estimate(busy, geom, channel, constraint, eta, 100_000, 24, "chain")
    joint = math.hypot(a.std_errors["r_total"], b.std_errors["r_total"])
    assert abs(a.r_hat - b.r_hat) > 3 * joint
    assert b.hypothesis_counts["MULTI"] > 0


def test_estimate_is_independent_of_worker_count(geom, traffic, channel, constraint):
    for mode in ("exact", "chain"):
        one = estimate(traffic, geom, channel, constraint, 64.7, 30_000, 99, mode, workers=1)
        four = estimate(traffic, geom, channel, constraint, 64.7, 30_000, 99, mode, workers=4)
        assert one == four


def test_seed_changes_result(geom, traffic, channel, constraint):
    a = estimate(traffic, geom, channel, constraint, 64.7, 10_000, 1)
    b = estimate(traffic, geom, channel, constraint, 64.7, 10_000, 2)
    assert a.r_hat != b.r_hat
