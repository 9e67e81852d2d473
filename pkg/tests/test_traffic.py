import math
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from crtraffic.errors import DomainError
from crtraffic.traffic import (
    SystemGeometry,
    TrafficModel,
    hypothesis_probabilities,
    residual_mass,
    transition_matrix,
)
from oracles import enumerate_single_transition

rates = st.floats(min_value=1e-6, max_value=1e3)


def test_geometry_from_reference_timing(geom):
    assert (geom.n_sense, geom.m_frame, geom.u) == (50, 250, 25)


@pytest.mark.parametrize(
    "t_samp, t_sense, t_frame",
    [(1e-4, 3e-4, 25e-3), (1e-4, 0.0, 25e-3), (1e-4, 25e-3, 25e-3), (0.0, 5e-3, 25e-3), (1e-4, 1e-4, 25e-3)],
)
def test_geometry_rejects_invalid(t_samp, t_sense, t_frame):
    with pytest.raises(DomainError):
        SystemGeometry(t_samp, t_sense, t_frame)


def test_validity_ratio(geom):
    assert geom.validity_ratio(TrafficModel(1.0, 4.0)) == pytest.approx(250 * 1e-4 * 4.0)


def test_stationary_law_sums_to_one():
    tr = TrafficModel(0.3, 7.0)
    assert tr.stationary_busy + tr.stationary_idle == 1.0
    assert tr.stationary_busy == pytest.approx(0.3 / 7.3)


@pytest.mark.parametrize("alpha, beta", [(0.0, 1.0), (1.0, 0.0), (-1.0, 1.0), (math.inf, 1.0)])
def test_traffic_rejects_degenerate_rates(alpha, beta):
    with pytest.raises(DomainError):
        TrafficModel(alpha, beta)


def test_transition_matrix_at_zero_is_identity():
    tm = transition_matrix(TrafficModel(1.0, 2.0), 0.0)
    np.testing.assert_array_equal(tm.as_array(), np.eye(2))


def test_transition_matrix_stationary_limit():
    tm = transition_matrix(TrafficModel(1.0, 2.0), 100.0)
    np.testing.assert_allclose(tm.as_array(), [[2 / 3, 1 / 3], [2 / 3, 1 / 3]], atol=1e-15)


def test_transition_matrix_closed_form_values():
    # alpha = 1, beta = 2, t = 0.1; values from 40-digit evaluation
    tm = transition_matrix(TrafficModel(1.0, 2.0), 0.1)
    assert tm.p_ii == pytest.approx(0.9136060735605726220, rel=1e-14)
    assert tm.p_ib == pytest.approx(0.0863939264394273780, rel=1e-14)
    assert tm.p_bi == pytest.approx(0.1727878528788547560, rel=1e-14)
    assert tm.p_bb == pytest.approx(0.8272121471211452440, rel=1e-14)


def test_transition_matrix_rate_swap_relabelling():
    # The variant with the two rates exchanged has, at alpha=1, beta=2,
    # exactly our entries at alpha=2, beta=1.
    tm = transition_matrix(TrafficModel(2.0, 1.0), 0.1)
    e = math.exp(-0.3)
    assert tm.p_ii == pytest.approx((1 + 2 * e) / 3, rel=1e-14)
    assert tm.p_ib == pytest.approx((2 - 2 * e) / 3, rel=1e-14)
    assert tm.p_ii == pytest.approx(0.827212, abs=1e-6)


def test_transition_matrix_rejects_negative_time():
    with pytest.raises(DomainError):
        transition_matrix(TrafficModel(1.0, 1.0), -1e-3)


@settings(max_examples=200, deadline=None)
@given(rates, rates, st.floats(min_value=0.0, max_value=1e3))
def test_transition_matrix_row_stochastic(alpha, beta, t):
    tm = transition_matrix(TrafficModel(alpha, beta), t)
    arr = tm.as_array()
    assert np.all((arr >= 0) & (arr <= 1))
    np.testing.assert_allclose(arr.sum(axis=1), 1.0, atol=1e-15)


@settings(max_examples=200, deadline=None)
@given(rates, rates, st.floats(min_value=0.0, max_value=5.0), st.floats(min_value=0.0, max_value=5.0))
def test_chapman_kolmogorov(alpha, beta, t1, t2):
    tr = TrafficModel(alpha, beta)
    lhs = transition_matrix(tr, t1).as_array() @ transition_matrix(tr, t2).as_array()
    np.testing.assert_allclose(lhs, transition_matrix(tr, t1 + t2).as_array(), atol=1e-12)


def _brute_force(tr, geom):
    tm = transition_matrix(tr, geom.t_samp).as_array()
    return enumerate_single_transition(tr.stationary_busy, tm, geom.n_sense, geom.m_frame)


def _assert_matches(hp, ref, tol=1e-12):
    assert hp.p_h11 == pytest.approx(ref["h11"], abs=tol)
    assert hp.p_h12 == pytest.approx(ref["h12"], abs=tol)
    assert hp.p_h01 == pytest.approx(ref["h01"], abs=tol)
    assert hp.p_h02 == pytest.approx(ref["h02"], abs=tol)


def test_hypotheses_toy_frame_brute_force():
    tr = TrafficModel(1.0, 2.0)
    g = SystemGeometry.from_samples(2, 6)
    hp = hypothesis_probabilities(tr, g)
    ref = _brute_force(tr, g)
    _assert_matches(hp, ref)
    assert residual_mass(hp) == pytest.approx(ref["multi"] + ref["unassigned"], abs=1e-15)


def test_hypotheses_brute_force_all_small_frames():
    rng = random.Random(11)
    for _ in range(10):
        tr = TrafficModel(10 ** rng.uniform(-2, 3), 10 ** rng.uniform(-2, 3))
        t_samp = 10 ** rng.uniform(-5, -2)
        for m in range(3, 13):
            for n in range(2, m, 2):
                g = SystemGeometry.from_samples(n, m, t_samp)
                _assert_matches(hypothesis_probabilities(tr, g), _brute_force(tr, g))


def test_hypotheses_full_frame_by_terms(geom):
    # M = 250 is too long to enumerate; check each term against the product
    # of per-step probabilities along its one trajectory instead.
    tr = TrafficModel(1.0, 2.0)
    hp = hypothesis_probabilities(tr, geom)
    tm = transition_matrix(tr, geom.t_samp)
    n, m = geom.n_sense, geom.m_frame
    for k in (1, 2, n - 1, n, n + 1, m // 2, m - 1):
        dep = tr.stationary_busy
        arr = tr.stationary_idle
        for step in range(1, m + 1):
            dep *= tm.p_bb if step <= k else (tm.p_bi if step == k + 1 else tm.p_ii)
            arr *= tm.p_ii if step <= k else (tm.p_ib if step == k + 1 else tm.p_bb)
        assert hp.departure_terms[k - 1] == pytest.approx(dep, rel=1e-12)
        assert hp.arrival_terms[k - 1] == pytest.approx(arr, rel=1e-12)
    assert hp.busy_stay == pytest.approx(tr.stationary_busy * tm.p_bb**m, rel=1e-12)
    assert hp.idle_stay == pytest.approx(tr.stationary_idle * tm.p_ii**m, rel=1e-12)


def test_hypotheses_no_arrivals_limit(geom):
    hp = hypothesis_probabilities(TrafficModel(1e-12, 1.0), geom)
    assert hp.p_h11 < 1e-11
    assert hp.p_h12 < 1e-11
    assert hp.p_h01 == pytest.approx(1.0, abs=1e-10)
    assert hp.p_h02 < 1e-11


def test_hypothesis_term_partition(geom):
    hp = hypothesis_probabilities(TrafficModel(3.0, 5.0), geom)
    n = geom.n_sense
    arrivals_in_tx = hp.p_h01 - hp.idle_stay
    assert hp.p_h12 + arrivals_in_tx == pytest.approx(math.fsum(hp.arrival_terms), rel=1e-13)
    assert hp.p_h12 == pytest.approx(math.fsum(hp.arrival_terms[:n]), rel=1e-15)
    assert hp.p_h02 == pytest.approx(math.fsum(hp.departure_terms[:n]), rel=1e-15)
    assert len(hp.arrival_terms) == geom.m_frame - 1


def test_residual_vanishes_without_transitions(geom):
    assert abs(residual_mass(hypothesis_probabilities(TrafficModel(1e-9, 1e-9), geom))) < 1e-10


def test_residual_grows_with_traffic(geom):
    low = residual_mass(hypothesis_probabilities(TrafficModel(1.0, 2.0), geom))
    high = residual_mass(hypothesis_probabilities(TrafficModel(100.0, 100.0), geom))
    assert low > 0
    assert high > 10 * low


def test_residual_equals_dropped_mass_full_frame(geom):
    # Closed-form complement: P(>= 2 transitions) + first-step transitions.
    tr = TrafficModel(1.0, 2.0)
    hp = hypothesis_probabilities(tr, geom)
    tm = transition_matrix(tr, geom.t_samp)
    m = geom.m_frame
    at_most_one = hp.busy_stay + hp.idle_stay + math.fsum(hp.arrival_terms) + math.fsum(hp.departure_terms)
    at_most_one += tr.stationary_busy * tm.p_bi * tm.p_ii ** (m - 1) + tr.stationary_idle * tm.p_ib * tm.p_bb ** (m - 1)
    # P(<= 1 transition) straight from a 2-state "transitions so far" recursion
    p = np.array([tr.stationary_idle, 0.0, tr.stationary_busy, 0.0])  # (idle,0) (idle,1) (busy,0) (busy,1)
    for _ in range(m):
        p = np.array(
            [
                p[0] * tm.p_ii,
                p[1] * tm.p_ii + p[2] * tm.p_bi,
                p[2] * tm.p_bb,
                p[3] * tm.p_bb + p[0] * tm.p_ib,
            ]
        )
    assert at_most_one == pytest.approx(p.sum(), rel=1e-12)
    dropped = 1.0 - p.sum() + tr.stationary_busy * tm.p_bi * tm.p_ii ** (m - 1) + tr.stationary_idle * tm.p_ib * tm.p_bb ** (m - 1)
    assert residual_mass(hp) == pytest.approx(dropped, rel=1e-9)
