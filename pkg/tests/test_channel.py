import math

import numpy as np
import pytest

from platoonsim.channel import (
    ShadowingState,
    dbm_to_mw,
    pathloss_db,
    rx_power_dbm,
    sinr_db,
    update_shadowing,
)
from platoonsim.config import PathlossModel


def _state(s_db, d_cor=25.0):
    return ShadowingState(tx_id=1, rx_id=2, d_cor_m=d_cor, s_db=s_db)


def test_zero_displacement_keeps_sample_exactly():
    st = _state(2.5)
    assert update_shadowing(st, 0.0, innovation_db=123.0) == 2.5


def test_large_displacement_forgets_history():
    st = _state(42.0)
    # alpha underflows to 0, the innovation term dominates with the printed minus sign
    assert update_shadowing(st, 1e12, innovation_db=1.7) == -1.7


def test_one_decorrelation_distance_update():
    st = _state(3.0, d_cor=25.0)
    got = update_shadowing(st, 25.0, innovation_db=1.0)
    # exp(-1) * 3 - sqrt(1 - exp(-2)) * 1
    assert got == pytest.approx(0.17376482848213326, rel=1e-12)
    assert st.block_index == 2


def test_negative_displacement_rejected():
    with pytest.raises(ValueError):
        update_shadowing(_state(0.0), -1.0, 0.0)


def _series(d_n, n, sigma=3.0, d_cor=25.0, seed=7):
    rng = np.random.default_rng(seed)
    st = _state(float(rng.normal(0.0, sigma)), d_cor=d_cor)
    out = np.empty(n)
    for i in range(n):
        out[i] = update_shadowing(st, d_n, float(rng.normal(0.0, sigma)))
    return out

def test_variance_is_stationary():
    s = _series(5.0, 30000)
    assert np.std(s) == pytest.approx(3.0, abs=0.15)


def test_lag1_autocorrelation_matches_alpha():
    for d_n in (1.0, 5.0, 25.0):
        s = _series(d_n, 30000, seed=11)
        rho = np.corrcoef(s[:-1], s[1:])[0, 1]
        assert rho == pytest.approx(math.exp(-d_n / 25.0), abs=0.03)


def test_pathloss_values():
    assert pathloss_db(3.0) == pytest.approx(53.26829262825885, rel=1e-12)
    assert pathloss_db(10.0) == pytest.approx(65.13764014612251, rel=1e-12)


def test_pathloss_floor_below_3m():
    assert pathloss_db(1.0) == pathloss_db(3.0)
    assert pathloss_db(0.0) == pathloss_db(3.0)


def test_pathloss_monotone_non_decreasing():
    ds = np.linspace(0.0, 500.0, 2000)
    pl = [pathloss_db(float(d)) for d in ds]
    assert all(b >= a for a, b in zip(pl, pl[1:]))


def test_pathloss_gap_shrinks_along_the_platoon():
    # successive vehicles at multiples of 7 m: the per-vehicle pathloss gap decays
    spacing = 7.0
    pl = [pathloss_db(i * spacing) for i in range(1, 10)]
    gaps = [b - a for a, b in zip(pl, pl[1:])]
    assert all(g > 0 for g in gaps)
    assert all(later < earlier for earlier, later in zip(gaps, gaps[1:]))


def test_free_space_alternative():
    fs = pathloss_db(100.0, model=PathlossModel.FREE_SPACE, carrier_ghz=5.9)
    assert fs == pytest.approx(32.45 + 20 * math.log10(100) + 20 * math.log10(5.9), rel=1e-12)
    assert pathloss_db(0.5, model=PathlossModel.FREE_SPACE) == pathloss_db(
        1.0, model=PathlossModel.FREE_SPACE
    )


def test_rx_power_arithmetic():
    pl = pathloss_db(10.0)
    assert rx_power_dbm(23.0, pl, 0.0) == pytest.approx(-42.13764014612251, rel=1e-12)
    assert rx_power_dbm(23.0, pl, 3.0) == pytest.approx(-45.13764014612251, rel=1e-12)


def test_rx_power_constant_without_shadowing():
    pl = pathloss_db(21.0)
    values = {rx_power_dbm(23.0, pl, 0.0) for _ in range(100)}
    assert len(values) == 1


def test_sinr_signal_equals_noise():
    assert sinr_db(-116.0, [], -116.0) == pytest.approx(0.0, abs=1e-12)


def test_sinr_noise_limited():
    got = sinr_db(rx_power_dbm(23.0, pathloss_db(10.0)), [], -116.0)
    assert got == pytest.approx(73.86235985387749, rel=1e-12)


def test_sinr_interference_limited():
    got = sinr_db(-50.0, [-50.0], -116.0)
    assert got == pytest.approx(-1.0908982798086033e-06, abs=1e-9)
    assert got == pytest.approx(0.0, abs=1e-5)


def test_dbm_mw_round_trip():
    for dbm in (-116.0, -50.0, 0.0, 23.0):
        assert 10 * math.log10(dbm_to_mw(dbm)) == pytest.approx(dbm, rel=1e-12)
