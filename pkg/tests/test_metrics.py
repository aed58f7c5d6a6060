from types import SimpleNamespace

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nomasched.metrics import (NEVER_SERVED, cell_edge, gini, long_term_rates, proposition_ratios,
                               rate_latency, service_report, service_utility)
from nomasched.sched import ServiceClass

rate_lists = st.lists(st.floats(0.0, 1e9, allow_nan=False), min_size=1, max_size=40).filter(
    lambda v: sum(v) > 0)


def gini_double_sum(r):
    r = list(map(float, r))
    K, mean = len(r), sum(r) / len(r)
    return sum(abs(x - y) for x in r for y in r) / (2 * K * K * mean)


def test_gini_hand_values():
    assert gini([1, 0]) == 0.5
    assert gini([1, 1, 1, 0]) == 0.25
    assert gini([3.0] * 7) == 0.0


@pytest.mark.parametrize("bad", [[], [0, 0], [1, -1], [1, np.inf]])
def test_gini_rejects(bad):
    with pytest.raises(ValueError):
        gini(bad)


@given(rate_lists)
def test_gini_matches_double_sum(r):
    assert gini(r) == pytest.approx(gini_double_sum(r), abs=1e-12)


@given(rate_lists)
def test_gini_bounds(r):
    g = gini(r)
    assert 0.0 <= g <= 1.0 - 1.0 / len(r) + 1e-12


def test_gini_one_user_takes_all():
    assert gini([0, 0, 0, 5]) == pytest.approx(0.75)


def test_long_term_rates_window():
    h = np.arange(12, dtype=float).reshape(6, 2)
    np.testing.assert_allclose(long_term_rates(h, t_c=3), [2.0, 3.0])
    np.testing.assert_allclose(long_term_rates(h, t_c=100), h.mean(axis=0))


def test_cell_edge_interpolates():
    assert cell_edge([np.arange(1, 101)], 5) == pytest.approx(5.95)
    assert cell_edge([np.arange(1, 51), np.arange(51, 101)], 5) == pytest.approx(5.95)


def test_rate_latency():
    h = np.array([[0, 1, 0], [2, 0, 0], [3, 1, 0]], dtype=float)
    np.testing.assert_array_equal(rate_latency(h), [2, 1, NEVER_SERVED])


def test_service_utility():
    assert service_utility([1.0, np.e]) == pytest.approx(1.0)
    assert service_utility([0.0, 1.0]) == -np.inf


def test_service_report():
    r = np.array([6.0, 6.0, 9.0, 12.0])
    rep = service_report(r, [ServiceClass("lo", 5.0, (0, 1)), ServiceClass("hi", 10.0, (2, 3))])
    assert rep["lo"].success and rep["lo"].gini == 0.0 and rep["lo"].group_rate_bps == 12.0
    assert not rep["hi"].success


def _log(served, rates, set_w, mean_w, n_cand=3):
    return SimpleNamespace(served=np.asarray(served, bool), rates_sk=np.asarray(rates, float),
                           set_weight=np.asarray(set_w, float), mean_weight=np.asarray(mean_w, float),
                           num_candidates=n_cand)


def test_proposition_ratios_hand_case():
    # 2 slots, 1 subband, 2 users
    a = _log([[[1, 0]], [[0, 1]]], [[[4, 0]], [[0, 2]]], [[2.0], [1.0]], [[1.0], [1.0]])
    b = _log([[[1, 0]], [[1, 0]]], [[[8, 0]], [[8, 0]]], [[1.0], [1.0]], [[1.0], [1.0]])
    # user 1 never served in b: excluded
    r = proposition_ratios([a], [b])
    assert r.excluded == [(0, 1)]
    assert r.ratio1 == pytest.approx(0.5)
    assert r.ratio2 == pytest.approx(2.0 * 4 / 8)


def test_proposition_ratios_identical_runs():
    a = _log([[[1, 1]], [[1, 0]]], [[[4, 3]], [[5, 0]]], [[2.0], [1.0]], [[2.0], [1.0]])
    r = proposition_ratios([a, a], [a, a])
    assert r.ratio1 == 1.0 and r.ratio2 == pytest.approx(1.0)


def test_proposition_ratios_sum_normalisation():
    a = _log([[[1, 1]]], [[[1, 1]]], [[2.0]], [[1.0]], n_cand=4)
    r_mean = proposition_ratios([a], [a], "mean")
    r_sum = proposition_ratios([a], [a], "sum")
    assert r_mean.ratio2 == pytest.approx(4.0)
    assert r_sum.ratio2 == pytest.approx(0.25)


def test_proposition_ratios_skip_zero_weight_decisions():
    a = _log([[[1, 0]], [[1, 0]]], [[[1, 0]], [[1, 0]]], [[0.0], [3.0]], [[0.0], [1.0]])
    r = proposition_ratios([a], [a])
    assert r.ratio2 == pytest.approx(3.0)


def test_proposition_ratios_mismatch():
    a = _log([[[1]]], [[[1]]], [[1.0]], [[1.0]])
    with pytest.raises(ValueError):
        proposition_ratios([a], [])


@given(st.lists(st.floats(0.0, 1e9, allow_nan=False), min_size=1, max_size=50))
def test_cell_edge_below_median(r):
    assert cell_edge([r], 5) <= np.median(r) + 1e-9 * max(1.0, max(r))


def test_median_can_exceed_mean():
    # so "cell_edge <= median <= mean" cannot hold for every sample
    r = [0.0, 10.0, 10.0]
    assert np.median(r) > np.mean(r)


def test_self_comparison_constant_weights_exact():
    a = _log([[[1, 1]], [[1, 0]]], [[[4, 3]], [[5, 0]]], [[2.0], [2.0]], [[2.0], [2.0]])
    r = proposition_ratios([a, a, a], [a, a, a])
    assert (r.ratio1, r.ratio2) == (1.0, 1.0)
