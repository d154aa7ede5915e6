"""Large-scale fading per link: log-distance pathloss, block-correlated shadowing, SINR.

The shadowing component is a dB-domain AR(1) process updated once per block:

    s_n = exp(-d_n / d_cor) * s_{n-1} - sqrt(1 - exp(-2 d_n / d_cor)) * innovation_n

with s_1 and the innovations drawn Gaussian (mean 0, sigma in dB). The minus
sign in front of the innovation term is kept as-is; the innovations are
symmetric so the process statistics are unchanged by it. Distance d_n is the
mean displacement of the two endpoints within the block, so the variance stays
exactly sigma^2 and the lag-1 autocorrelation equals exp(-d_n / d_cor).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .config import PathlossModel


@dataclass
class ShadowingState:
    """Current shadowing sample of one directed link, plus block bookkeeping."""

    tx_id: int
    rx_id: int
    d_cor_m: float
    s_db: float
    block_index: int = 1
    last_positions: tuple[float, float] = (0.0, 0.0)


def update_shadowing(state: ShadowingState, d_n_m: float, innovation_db: float) -> float:
    """Advance the per-block shadowing process by one block; returns the new sample."""
    if d_n_m < 0:
        raise ValueError(f"block displacement must be >= 0, got {d_n_m}")
    alpha = math.exp(-d_n_m / state.d_cor_m)
    state.s_db = alpha * state.s_db - math.sqrt(1.0 - alpha * alpha) * innovation_db
    state.block_index += 1
    return state.s_db


_WINNER_FLOOR_M = 3.0


def pathloss_db(
    d_m: float,
    model: PathlossModel = PathlossModel.WINNER_B1,
    carrier_ghz: float = 5.9,
) -> float:
    """Deterministic pathloss in dB, strictly non-decreasing in distance.

    Default is a WINNER-B1-LOS-shaped log-distance law with a 3 m floor; the
    free-space alternative uses a 1 m floor.
    """
    if d_m < 0:
        raise ValueError(f"distance must be >= 0, got {d_m}")
    if model is PathlossModel.FREE_SPACE:
        d = max(d_m, 1.0)
        return 32.45 + 20.0 * math.log10(d) + 20.0 * math.log10(carrier_ghz)
    d = max(d_m, _WINNER_FLOOR_M)
    return 41.0 + 22.7 * math.log10(d) + 20.0 * math.log10(carrier_ghz / 5.0)


def rx_power_dbm(tx_dbm: float, pathloss: float, shadow_db: float = 0.0) -> float:
    """Received power: tx minus pathloss minus the link's current shadowing sample."""
    return tx_dbm - pathloss - shadow_db


def dbm_to_mw(dbm: float) -> float:
    return 10.0 ** (dbm / 10.0)


def mw_to_dbm(mw: float) -> float:
    return 10.0 * math.log10(mw)


def sinr_db(rx_dbm: float, interferer_dbm: list[float], noise_dbm: float) -> float:
    """Signal over noise plus summed interference, all converted to mW."""
    denom = dbm_to_mw(noise_dbm) + sum(dbm_to_mw(p) for p in interferer_dbm)
    return 10.0 * math.log10(dbm_to_mw(rx_dbm) / denom)
