import numpy as np
import pytest

from platoonsim.metrics import (
    AutomationLevel,
    LEVEL_REQUIREMENTS,
    LevelRequirement,
    MetricsError,
    MetricsStore,
    layer_profile,
    pdr,
    platoon_length,
)
from platoonsim.stack import LAYER_ORDER, Layer


def _store(n_vehicles=9, sim_time_ms=45000):
    return MetricsStore(
        scenario_id="test", seed=0, n_vehicles=n_vehicles, sim_time_ms=sim_time_ms
    )


def _fill(store, vehicle, tx, delivered, delay=1.0, payload_bytes=72):
    for _ in range(tx):
        store.count_tx(vehicle)
    for _ in range(delivered):
        store.record(vehicle, Layer.APP, delay, payload_bytes * 8)


def test_requirement_table_values():
    l12 = LEVEL_REQUIREMENTS[AutomationLevel.L1_L2]
    l35 = LEVEL_REQUIREMENTS[AutomationLevel.L3_L5]
    assert (l12.min_reliability, l12.max_latency_ms, l12.min_length) == (0.90, 25.0, 5)
    assert (l35.min_reliability, l35.max_latency_ms, l35.min_length) == (0.9999, 10.0, 5)


def test_pdr_simple_ratios():
    store = _store()
    _fill(store, 2, 2250, 2250)
    _fill(store, 3, 10, 9)
    assert pdr(store, 2) == 1.0
    assert pdr(store, 3) == 0.9


def test_pdr_zero_tx_is_an_error():
    store = _store()
    with pytest.raises(MetricsError):
        pdr(store, 2)


def test_pdr_latency_gating():
    store = _store()
    store.count_tx(2)
    store.count_tx(2)
    store.record(2, Layer.APP, 5.0, 576)
    store.record(2, Layer.APP, 30.0, 576)
    assert pdr(store, 2) == 1.0
    assert pdr(store, 2, max_latency_ms=25.0) == 0.5


def test_platoon_length_all_compliant():
    store = _store()
    for v in range(2, 10):
        _fill(store, v, 100, 100)
    assert platoon_length(store, LEVEL_REQUIREMENTS[AutomationLevel.L1_L2]) == 9


def test_platoon_length_none_compliant():
    store = _store()
    for v in range(2, 10):
        _fill(store, v, 100, 50)
    assert platoon_length(store, LEVEL_REQUIREMENTS[AutomationLevel.L1_L2]) == 1


def test_platoon_length_breaks_at_first_failure():
    # V2..V9 PDRs: the run stops at V6 even though V7 is compliant again
    store = _store()
    rates = [95, 93, 91, 90, 85, 92, 80, 75]
    for v, rate in zip(range(2, 10), rates):
        _fill(store, v, 100, rate)
    req = LevelRequirement(AutomationLevel.L1_L2, 0.90, 25.0, 5)
    assert platoon_length(store, req) == 5


def test_platoon_length_monotone_in_requirements():
    rng = np.random.default_rng(17)
    for _ in range(50):
        store = _store()
        for v in range(2, 10):
            tx = int(rng.integers(50, 200))
            delivered = int(rng.integers(0, tx + 1))
            for _ in range(tx):
                store.count_tx(v)
            for _ in range(delivered):
                store.record(v, Layer.APP, float(rng.uniform(1, 40)), 576)
        reliabilities = sorted(rng.uniform(0.5, 1.0, size=3))
        lengths = [
            platoon_length(store, LevelRequirement(AutomationLevel.L1_L2, r, 25.0, 5))
            for r in reliabilities
        ]
        assert all(a >= b for a, b in zip(lengths, lengths[1:]))  # stricter => shorter
        latencies = sorted(rng.uniform(1, 40, size=3))
        lengths = [
            platoon_length(store, LevelRequirement(AutomationLevel.L1_L2, 0.9, L, 5))
            for L in latencies
        ]
        assert all(a <= b for a, b in zip(lengths, lengths[1:]))  # looser => longer


def test_layer_profile_throughput_examples():
    # 2250 deliveries of 72 B over 45 s -> 28.8 kbps at APP, 40.0 kbps at network
    store = _store()
    for _ in range(2250):
        store.record(2, Layer.APP, 1.0, 72 * 8)
        store.record(2, Layer.NETWORK, 1.0, 100 * 8)
    profile = layer_profile(store, 2)
    assert profile[Layer.APP].throughput_kbps == pytest.approx(28.8)
    assert profile[Layer.NETWORK].throughput_kbps == pytest.approx(40.0)


def test_layer_profile_single_delivery():
    store = _store()
    for layer in LAYER_ORDER:
        store.record(2, layer, 1.0, 100)
    profile = layer_profile(store, 2)
    assert set(profile) == set(LAYER_ORDER)
    for stats in profile.values():
        assert stats.mean_delay_ms == 1.0
        assert stats.p95_delay_ms == 1.0


def test_layer_profile_absent_when_no_deliveries():
    store = _store()
    store.record(2, Layer.MAC, 1.0, 500)
    profile = layer_profile(store, 2)
    assert Layer.MAC in profile
    assert Layer.APP not in profile


def test_p95_nearest_rank():
    store = _store()
    for d in range(1, 101):
        store.record(2, Layer.APP, float(d), 8)
    assert layer_profile(store, 2)[Layer.APP].p95_delay_ms == 95.0
    assert layer_profile(store, 2)[Layer.APP].mean_delay_ms == pytest.approx(50.5)


def test_rx_never_exceeds_tx_in_engine_output():
    from platoonsim.engine import run_scenario
    import dataclasses
    from platoonsim.config import default_scenario

    store = run_scenario(
        dataclasses.replace(default_scenario(), sim_time_ms=4000, tx_power_dbm=-30.0)
    )
    for v in store.receivers():
        assert store.rx_count(v) <= store.tx_count[v]
        bits = [store.bits.get((v, layer), 0) for layer in LAYER_ORDER]
        assert all(b >= a for a, b in zip(bits, bits[1:]))  # headers only ever add
