"""Resource-grid layouts, transport-block sizing, and the SINR-threshold link abstraction.

Transport block sizing uses an analytic modulation/code-rate table rather than
a standards-exact lookup: it is reproducible, monotone in MCS, and pluggable.
A subframe carries 14 OFDM symbols of which DMRS (4 by default, the
high-Doppler option) and one guard symbol are overhead, leaving 9 data symbols.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .config import GridLayout, ScenarioConfig

SUBCARRIERS_PER_RB = 12
DEFAULT_DATA_SYMBOLS = 9  # 14 - 4 DMRS - 1 guard


class PhyError(ValueError):
    pass


def _check_mcs(mcs: int) -> None:
    if not 0 <= mcs <= 28:
        raise PhyError(f"mcs must be in 0..28, got {mcs}")


def modulation_order(mcs: int) -> int:
    """Bits per symbol: QPSK for mcs 0-9, 16QAM for 10-16, 64QAM for 17-28."""
    _check_mcs(mcs)
    if mcs <= 9:
        return 2
    if mcs <= 16:
        return 4
    return 6


def code_rate(mcs: int) -> float:
    _check_mcs(mcs)
    if mcs <= 9:
        return 0.12 + 0.06 * mcs
    if mcs <= 16:
        return 0.33 + 0.05 * (mcs - 10)
    return 0.43 + 0.045 * (mcs - 17)


def spectral_efficiency(mcs: int) -> float:
    return modulation_order(mcs) * code_rate(mcs)


def tbs_bits(mcs: int, n_rb: int, data_symbols: int = DEFAULT_DATA_SYMBOLS) -> int:
    """Payload bits carried by n_rb resource blocks at the given MCS."""
    _check_mcs(mcs)
    if n_rb < 0:
        raise PhyError(f"n_rb must be >= 0, got {n_rb}")
    return math.floor(n_rb * SUBCARRIERS_PER_RB * data_symbols * spectral_efficiency(mcs))


def min_rbs(
    mcs: int,
    app_payload_bytes: int,
    overhead_bytes: int = 33,
    data_symbols: int = DEFAULT_DATA_SYMBOLS,
    n_rb_cap: int | None = None,
) -> int | None:
    """Smallest RB count whose TBS fits the payload plus stack overhead.

    Returns None when the requirement exceeds n_rb_cap (infeasible), never raises.
    """
    _check_mcs(mcs)
    if app_payload_bytes < 0:
        raise PhyError(f"payload must be >= 0, got {app_payload_bytes}")
    need_bits = 8 * (app_payload_bytes + overhead_bytes)
    if need_bits == 0:
        return 0
    per_rb = SUBCARRIERS_PER_RB * data_symbols * spectral_efficiency(mcs)
    n = max(1, math.ceil(need_bits / per_rb) - 1)
    while tbs_bits(mcs, n, data_symbols) < need_bits:
        n += 1
    if n_rb_cap is not None and n > n_rb_cap:
        return None
    return n


def sinr_threshold_db(mcs: int, margin_db: float = 3.0) -> float:
    """Shannon-style decode threshold for the MCS efficiency, plus a fixed margin."""
    eff = spectral_efficiency(mcs)
    return 10.0 * math.log10(2.0**eff - 1.0) + margin_db


def decode(
    sinr: float,
    mcs: int,
    rng=None,
    *,
    receiver_transmitting: bool = False,
    probabilistic: bool = False,
    beta_db: float = 0.5,
    margin_db: float = 3.0,
) -> bool:
    """Link abstraction: can this transport block be decoded at the given SINR?

    A half-duplex receiver that transmits in the same subframe never decodes.
    Deterministic mode succeeds iff sinr >= threshold; probabilistic mode
    succeeds with logistic probability 1 / (1 + exp((threshold - sinr) / beta)).
    """
    if receiver_transmitting:
        return False
    threshold = sinr_threshold_db(mcs, margin_db)
    if not probabilistic:
        return sinr >= threshold
    if rng is None:
        raise PhyError("probabilistic decode requires an rng")
    p = 1.0 / (1.0 + math.exp((threshold - sinr) / beta_db))
    return bool(rng.random() < p)


@dataclass(frozen=True)
class Subchannel:
    index: int
    pscch_rbs: tuple[int, int]  # [start, stop) within the grid, empty if stop == start
    data_rbs: tuple[int, int]  # [start, stop)

    @property
    def n_data_rb(self) -> int:
        return self.data_rbs[1] - self.data_rbs[0]


@dataclass
class ResourceGrid:
    """Subchannel geometry of the sidelink band plus per-subframe RB occupancy."""

    layout: GridLayout
    n_rb_total: int
    subchannel_size_rb: int
    pscch_rb_per_subchannel: int
    pscch_pool: tuple[int, int] | None  # dedicated pool (R12 / HYBRID), [start, stop)
    subchannels: list[Subchannel]
    _occupancy: dict[tuple[int, int], int] = field(default_factory=dict, repr=False)

    @property
    def n_subchannels(self) -> int:
        return len(self.subchannels)

    @property
    def data_rb_per_subchannel(self) -> int:
        return self.subchannels[0].n_data_rb

    def data_rbs_of(self, subchannel_indices: tuple[int, ...]) -> tuple[int, ...]:
        rbs: list[int] = []
        for s in subchannel_indices:
            start, stop = self.subchannels[s].data_rbs
            rbs.extend(range(start, stop))
        return tuple(rbs)

    def occupy(self, subframe: int, rbs: tuple[int, ...], tx_id: int) -> None:
        """Book RBs for one transmitter; a double booking within a subframe raises."""
        for rb in rbs:
            key = (subframe, rb)
            if key in self._occupancy:
                raise PhyError(
                    f"RB {rb} in subframe {subframe} already booked by "
                    f"vehicle {self._occupancy[key]}"
                )
        for rb in rbs:
            self._occupancy[(subframe, rb)] = tx_id

    def occupant(self, subframe: int, rb: int) -> int | None:
        return self._occupancy.get((subframe, rb))


def build_grid(cfg: ScenarioConfig) -> ResourceGrid:
    """Lay out subchannels for the configured layout; raises PhyError when infeasible."""
    total = cfg.n_rb_total
    size = cfg.subchannel_size_rb
    pscch = cfg.pscch_rb_per_subchannel
    layout = cfg.grid_layout

    if layout is GridLayout.R12:
        embedded = 0
    else:
        if size < pscch + 1:
            raise PhyError(
                f"subchannel_size_rb {size} must be >= pscch_rb_per_subchannel + 1 ({pscch + 1})"
            )
        embedded = pscch

    pool: tuple[int, int] | None = None
    base = 0
    if layout in (GridLayout.R12, GridLayout.HYBRID):
        if cfg.pscch_pool_rb < 1:
            raise PhyError(f"{layout.name} layout needs a dedicated PSCCH pool (pscch_pool_rb >= 1)")
        if cfg.pscch_pool_rb >= total:
            raise PhyError(
                f"PSCCH pool ({cfg.pscch_pool_rb} RBs) leaves no room for data in {total} RBs"
            )
        pool = (0, cfg.pscch_pool_rb)
        base = cfg.pscch_pool_rb

    n_subch = (total - base) // size
    if n_subch < 1:
        raise PhyError(
            f"grid infeasible: {total - base} RBs available for subchannels of {size} RBs"
        )

    subchannels = []
    for k in range(n_subch):
        start = base + k * size
        subchannels.append(
            Subchannel(
                index=k,
                pscch_rbs=(start, start + embedded),
                data_rbs=(start + embedded, start + size),
            )
        )
    return ResourceGrid(
        layout=layout,
        n_rb_total=total,
        subchannel_size_rb=size,
        pscch_rb_per_subchannel=pscch,
        pscch_pool=pool,
        subchannels=subchannels,
    )


@dataclass
class TransportBlock:
    """One PSSCH transmission: whole subchannels, a MAC PDU, padding up to TBS."""

    tx_id: int
    subframe: int
    subchannels: tuple[int, ...]
    mcs: int
    payload_bits: int
    padding_bits: int
    data_rbs: tuple[int, ...]
    pdu: object = None  # the MAC PDU (a stack.TaggedPacket)
    sci: object = None  # the accompanying mac_sps.SCI

    @property
    def tbs(self) -> int:
        return self.payload_bits + self.padding_bits
