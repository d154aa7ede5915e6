"""Per-vehicle delivery accounting: PDR, per-layer delay/throughput, platoon length.

A vehicle's PDR is its APP-layer deliveries over the packets addressed to it.
Platooning-length determination applies an automation-level requirement
jointly per packet: a delivery counts only when its APP delay meets the
latency bound, and the platoon extends while consecutive followers meet the
reliability bound under that gating.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

from .stack import LAYER_ORDER, Layer


class MetricsError(ValueError):
    pass


class AutomationLevel(enum.Enum):
    L1_L2 = "L1_L2"
    L3_L5 = "L3_L5"


@dataclass(frozen=True)
class LevelRequirement:
    level: AutomationLevel
    min_reliability: float
    max_latency_ms: float
    min_length: int


# R15 platooning requirements per SAE automation band
LEVEL_REQUIREMENTS = {
    AutomationLevel.L1_L2: LevelRequirement(AutomationLevel.L1_L2, 0.90, 25.0, 5),
    AutomationLevel.L3_L5: LevelRequirement(AutomationLevel.L3_L5, 0.9999, 10.0, 5),
}


@dataclass
class MetricsStore:
    """Delivery records of one scenario run."""

    scenario_id: str
    seed: int
    n_vehicles: int
    sim_time_ms: int
    tx_count: dict[int, int] = field(default_factory=dict)  # per receiving vehicle
    delays: dict[tuple[int, Layer], list[float]] = field(default_factory=dict)
    bits: dict[tuple[int, Layer], int] = field(default_factory=dict)
    grant_overflow: dict[int, int] = field(default_factory=dict)  # per transmitter

    def count_tx(self, rx: int) -> None:
        self.tx_count[rx] = self.tx_count.get(rx, 0) + 1

    def record(self, rx: int, layer: Layer, delay_ms: float, bits: int) -> None:
        key = (rx, layer)
        self.delays.setdefault(key, []).append(delay_ms)
        self.bits[key] = self.bits.get(key, 0) + bits

    def rx_count(self, vehicle: int) -> int:
        return len(self.delays.get((vehicle, Layer.APP), ()))

    def receivers(self) -> list[int]:
        return sorted(self.tx_count)


def pdr(store: MetricsStore, vehicle: int, max_latency_ms: float | None = None) -> float:
    """Delivered over transmitted for one receiver, optionally gated by APP latency."""
    tx = store.tx_count.get(vehicle, 0)
    if tx == 0:
        raise MetricsError(f"vehicle {vehicle} was never a receiver (tx_count = 0)")
    app_delays = store.delays.get((vehicle, Layer.APP), [])
    if max_latency_ms is None:
        return len(app_delays) / tx
    return sum(1 for d in app_delays if d <= max_latency_ms) / tx


def platoon_length(store: MetricsStore, req: LevelRequirement) -> int:
    """Leader plus the longest run of consecutive compliant followers from V2 on."""
    length = 1
    for vehicle in range(2, store.n_vehicles + 1):
        if store.tx_count.get(vehicle, 0) == 0:
            break
        if pdr(store, vehicle, max_latency_ms=req.max_latency_ms) < req.min_reliability:
            break
        length += 1
    return length


@dataclass(frozen=True)
class LayerStats:
    mean_delay_ms: float
    p95_delay_ms: float
    throughput_kbps: float


def _p95(values: list[float]) -> float:
    # nearest-rank percentile: deterministic and interpolation-free
    ordered = sorted(values)
    rank = max(1, math.ceil(0.95 * len(ordered)))
    return ordered[rank - 1]


def layer_profile(store: MetricsStore, vehicle: int) -> dict[Layer, LayerStats]:
    """Mean/p95 delay and throughput per layer; layers with no deliveries are absent."""
    profile: dict[Layer, LayerStats] = {}
    for layer in LAYER_ORDER:
        key = (vehicle, layer)
        delays = store.delays.get(key)
        if not delays:
            continue
        profile[layer] = LayerStats(
            mean_delay_ms=sum(delays) / len(delays),
            p95_delay_ms=_p95(delays),
            throughput_kbps=store.bits[key] / store.sim_time_ms,  # bits per ms == kbit/s
        )
    return profile
