import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nomasched.channel import CellGeometry
from nomasched.power import equal_subband_power, ftpa_allocate, ftpa_powers

gains = st.floats(min_value=1e-3, max_value=1e9, allow_nan=False)


def test_equal_subband_power_default():
    assert equal_subband_power(CellGeometry()) == pytest.approx(311.02122699491946, rel=1e-12)


def test_single_subband_gets_everything():
    geo = CellGeometry(num_subbands=1)
    assert equal_subband_power(geo) == geo.p_max_mw


def test_subband_powers_sum_to_budget():
    geo = CellGeometry(num_subbands=100)
    assert equal_subband_power(geo) * 100 == pytest.approx(geo.p_max_mw, rel=1e-9)


def test_alpha_zero_equal_split():
    alloc = ftpa_allocate((3, 8), [17.0, 0.2], 2.0, alpha=0.0)
    assert alloc.per_user == {3: 1.0, 8: 1.0}


def test_single_user_full_power():
    alloc = ftpa_allocate((5,), [12.0], 311.0)
    assert alloc.per_user == {5: 311.0}


def test_two_user_hand_value():
    # 4**-0.4 / (4**-0.4 + 1)
    alloc = ftpa_allocate((0, 1), [4.0, 1.0], 1.0, alpha=0.4)
    assert alloc.per_user[0] == pytest.approx(0.36481689431254416, rel=1e-12)
    assert alloc.per_user[1] == pytest.approx(0.6351831056874558, rel=1e-12)


@pytest.mark.parametrize("bad", [[0.0, 1.0], [-2.0, 1.0], [np.nan, 1.0]])
def test_rejects_nonpositive_gain(bad):
    with pytest.raises(ValueError):
        ftpa_allocate((0, 1), bad, 1.0)


def test_rejects_empty_candidate():
    with pytest.raises(ValueError):
        ftpa_allocate((), [], 1.0)


@given(st.lists(gains, min_size=1, max_size=3), st.floats(0.0, 2.0))
def test_power_conserved(g, alpha):
    p = ftpa_powers(np.array(g), 311.0, alpha)
    assert np.all(p >= 0)
    assert p.sum() == pytest.approx(311.0, rel=1e-9)


@given(gains, gains, st.floats(0.01, 2.0))
def test_weaker_user_gets_more(ga, gb, alpha):
    if ga == gb:
        return
    p = ftpa_powers(np.array([ga, gb]), 1.0, alpha)
    assert (p[0] > p[1]) == (ga < gb)


def test_small_alpha_tends_to_equal_split():
    g = np.array([1e2, 1e6, 3.0])
    for alpha, tol in [(1e-3, 1e-2), (1e-6, 1e-5), (1e-9, 1e-8)]:
        np.testing.assert_allclose(ftpa_powers(g, 3.0, alpha), 1.0, atol=tol)
