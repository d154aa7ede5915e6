"""Sensing-based semi-persistent scheduling for mode-4 autonomous resource selection.

Each transmitter keeps a trailing sensing window (1000 ms by default) of
per-subchannel RSSI measurements and decoded SCI reservations. When a resource
(re)selection is due it excludes candidates colliding with reserved resources
above the RSRP threshold (relaxing the threshold by 3 dB until at least 20% of
the pool survives), ranks the survivors by ascending mean linear RSSI over the
window, and picks uniformly among the best 20% of the original pool size.
Subframes in which the vehicle itself transmitted were not sensed (half
duplex); they contribute the window-average RSSI so they never look
artificially idle.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

from .channel import dbm_to_mw
from .config import ScenarioConfig
from .phy import ResourceGrid, TransportBlock, sinr_threshold_db, tbs_bits
from .stack import TxStack, finalize_mac


class MacError(ValueError):
    pass


@dataclass(frozen=True)
class SCI:
    """Sidelink control information announcing a reservation."""

    tx_id: int
    subchannels: tuple[int, ...]
    mcs: int
    period_ms: int
    retransmission: bool = False


@dataclass(frozen=True)
class ReservationRecord:
    """A decoded SCI as remembered by a sensing vehicle."""

    subframe: int  # subframe in which the announcing transmission occupied the resource
    subchannels: tuple[int, ...]
    tx_id: int
    period_ms: int
    rsrp_dbm: float


@dataclass(frozen=True)
class Candidate:
    subframe: int
    subchannels: tuple[int, ...]


@dataclass
class Reservation:
    """The transmitter's current semi-persistent grant."""

    subframe: int  # next transmission subframe
    subchannels: tuple[int, ...]
    period_ms: int
    reselection_counter: int


def build_sci(reservation: Reservation, mcs: int, tx_id: int) -> SCI:
    return SCI(
        tx_id=tx_id,
        subchannels=reservation.subchannels,
        mcs=mcs,
        period_ms=reservation.period_ms,
    )


def decode_sci(sci: SCI, sinr: float, margin_db: float = 3.0, delta_db: float = 3.0) -> SCI | None:
    """SCI decoding is easier than data by delta_db; returns None below that point."""
    if sinr >= sinr_threshold_db(sci.mcs, margin_db) - delta_db:
        return sci
    return None


class SensingHistory:
    """Trailing-window channel observations of one sensing vehicle.

    Kept sparse: subframes with no record were sensed idle (noise-floor RSSI),
    subframes in own_tx were not sensed at all.
    """

    def __init__(self, n_subchannels: int, window_ms: int, noise_dbm: float):
        self.n_subchannels = n_subchannels
        self.window_ms = window_ms
        self.noise_mw = dbm_to_mw(noise_dbm)
        self.busy: deque[tuple[int, list[float]]] = deque()  # (subframe, mW per subchannel)
        self.own_tx: deque[int] = deque()
        self.reservations: deque[ReservationRecord] = deque()

    def evict_before(self, subframe: int) -> None:
        while self.busy and self.busy[0][0] < subframe:
            self.busy.popleft()
        while self.own_tx and self.own_tx[0] < subframe:
            self.own_tx.popleft()
        while self.reservations and self.reservations[0].subframe < subframe:
            self.reservations.popleft()

    def observe_busy(self, subframe: int, rssi_mw: list[float]) -> None:
        if len(rssi_mw) != self.n_subchannels:
            raise MacError("RSSI vector length must match the subchannel count")
        self.busy.append((subframe, rssi_mw))
        self.evict_before(subframe - self.window_ms + 1)

    def observe_own_tx(self, subframe: int) -> None:
        self.own_tx.append(subframe)
        self.evict_before(subframe - self.window_ms + 1)

    def add_reservation(self, record: ReservationRecord) -> None:
        self.reservations.append(record)


def _window_average_mw(history: SensingHistory, win_start: int, win_end: int) -> float:
    """Mean linear RSSI over every sensed (subframe, subchannel) cell in the window."""
    own = {t for t in history.own_tx if win_start <= t <= win_end}
    n_sensed = max(0, win_end - win_start + 1) - len(own)
    if n_sensed <= 0:
        return history.noise_mw
    busy_sum = 0.0
    busy_count = 0
    for t, rssi in history.busy:
        if win_start <= t <= win_end:
            busy_sum += sum(rssi)
            busy_count += 1
    total_cells = n_sensed * history.n_subchannels
    idle_cells = total_cells - busy_count * history.n_subchannels
    return (busy_sum + idle_cells * history.noise_mw) / total_cells


class _WindowView:
    """Precomputed sensing-window state shared by all candidates of one sense() call."""

    def __init__(self, history: SensingHistory, win_start: int, win_end: int):
        self.win_start = win_start
        self.win_end = win_end
        self.noise_mw = history.noise_mw
        self.own = {t for t in history.own_tx if win_start <= t <= win_end}
        self.busy = {t: rssi for t, rssi in history.busy if win_start <= t <= win_end}
        self.avg = _window_average_mw(history, win_start, win_end)

    def candidate_mean(self, candidate: Candidate, period_ms: int) -> float:
        total = 0.0
        count = 0
        t = candidate.subframe - period_ms
        while t >= self.win_start:
            if t <= self.win_end:
                for c in candidate.subchannels:
                    if t in self.own:
                        total += self.avg
                    elif t in self.busy:
                        total += self.busy[t][c]
                    else:
                        total += self.noise_mw
                    count += 1
            t -= period_ms
        return total / count if count else self.avg


def candidate_mean_rssi_mw(
    history: SensingHistory,
    candidate: Candidate,
    period_ms: int,
    win_start: int,
    win_end: int,
) -> float:
    """Mean linear RSSI of a candidate over its period-congruent window slots.

    The slots t_cand - k*period (k >= 1) inside the sensing window are
    averaged over the candidate's subchannels. Busy slots contribute their
    measured value, idle sensed slots the noise floor, and slots where the
    vehicle itself transmitted (unsensed, half duplex) the window average so
    they never look artificially quiet. With no congruent slot in the window
    the candidate scores the window average.
    """
    return _WindowView(history, win_start, win_end).candidate_mean(candidate, period_ms)


def _projected_reservations(
    history: SensingHistory, sel_start: int, sel_end: int
) -> list[tuple[int, tuple[int, ...], float]]:
    """Future (subframe, subchannels, rsrp) slots implied by decoded reservations."""
    projected = []
    for rec in history.reservations:
        if rec.period_ms <= 0:
            continue
        k = max(1, math.ceil((sel_start - rec.subframe) / rec.period_ms))
        t = rec.subframe + k * rec.period_ms
        while t <= sel_end:
            projected.append((t, rec.subchannels, rec.rsrp_dbm))
            t += rec.period_ms
    return projected


def sense(
    history: SensingHistory,
    sel_start: int,
    sel_end: int,
    needed_subchannels: int,
    rsrp_threshold_dbm: float,
    period_ms: int,
    now: int | None = None,
) -> list[Candidate]:
    """Mode-4 candidate selection over the window [sel_start, sel_end].

    Step 1 excludes candidates colliding with projected reservations at or
    above the RSRP threshold, relaxing the threshold by 3 dB while fewer than
    20% of the pool survives. Step 2 ranks survivors by ascending mean RSSI
    over the sensing window (period-congruent slots) and returns the lowest
    20% of the original pool size (at least one), ties broken by ascending
    (subframe, first subchannel).
    """
    if sel_start > sel_end:
        raise MacError(f"empty selection window [{sel_start}, {sel_end}]")
    if needed_subchannels < 1 or needed_subchannels > history.n_subchannels:
        raise MacError(
            f"need {needed_subchannels} contiguous subchannels, grid has {history.n_subchannels}"
        )
    pool = [
        Candidate(t, tuple(range(s, s + needed_subchannels)))
        for t in range(sel_start, sel_end + 1)
        for s in range(history.n_subchannels - needed_subchannels + 1)
    ]

    projected = _projected_reservations(history, sel_start, sel_end)
    threshold = rsrp_threshold_dbm
    while True:
        survivors = []
        for cand in pool:
            excluded = False
            for t, subs, rsrp in projected:
                if t == cand.subframe and rsrp >= threshold and set(subs) & set(cand.subchannels):
                    excluded = True
                    break
            if not excluded:
                survivors.append(cand)
        if len(survivors) >= 0.2 * len(pool):
            break
        threshold += 3.0

    sense_now = sel_start - 1 if now is None else now
    view = _WindowView(history, sense_now - history.window_ms, sense_now - 1)
    ranked = sorted(
        survivors,
        key=lambda c: (view.candidate_mean(c, period_ms), c.subframe, c.subchannels[0]),
    )
    n_take = max(1, math.floor(0.2 * len(pool)))
    return ranked[:n_take]


def select_resource(candidates: list[Candidate], rng, period_ms: int) -> Reservation:
    """Uniform pick among the sensed candidates; counter drawn uniformly from [5, 15]."""
    if not candidates:
        raise MacError("cannot select from an empty candidate set")
    choice = candidates[int(rng.integers(0, len(candidates)))]
    counter = int(rng.integers(5, 16))
    return Reservation(
        subframe=choice.subframe,
        subchannels=choice.subchannels,
        period_ms=period_ms,
        reselection_counter=counter,
    )


class SpsScheduler:
    """Per-vehicle SPS state machine driven by the engine at subframe granularity."""

    def __init__(self, cfg: ScenarioConfig, grid: ResourceGrid, vehicle_id: int, rng):
        self.cfg = cfg
        self.grid = grid
        self.vehicle_id = vehicle_id
        self.rng = rng
        per_subchannel = grid.data_rb_per_subchannel
        self.needed_subchannels = math.ceil(cfg.n_rbs / per_subchannel)
        if self.needed_subchannels > grid.n_subchannels:
            raise MacError(
                f"grant of {cfg.n_rbs} RBs needs {self.needed_subchannels} subchannels, "
                f"grid has {grid.n_subchannels}"
            )
        self.history = SensingHistory(
            grid.n_subchannels, cfg.sps_sensing_window_ms, cfg.noise_dbm
        )
        self.reservation: Reservation | None = None
        self.grant_overflow = 0

    def _reselect(self, now: int) -> None:
        candidates = sense(
            self.history,
            now + self.cfg.sps_selection_t1_ms,
            now + self.cfg.selection_t2_ms(),
            self.needed_subchannels,
            self.cfg.sps_rsrp_threshold_dbm,
            self.cfg.app_interval_ms,
            now=now,
        )
        self.reservation = select_resource(candidates, self.rng, self.cfg.app_interval_ms)

    def ensure_reservation(self, now: int) -> None:
        if self.reservation is None:
            self._reselect(now)

    def on_subframe(self, t: int, tx_stack: TxStack) -> TransportBlock | None:
        """Emit the reserved transmission at t, if due and data is queued."""
        res = self.reservation
        if res is None or t != res.subframe:
            return None
        pdu = tx_stack.pop_for_grant()
        if pdu is None:
            res.subframe = t + res.period_ms  # unused grant, counter untouched
            return None

        data_rbs = self.grid.data_rbs_of(res.subchannels)
        tbs = tbs_bits(self.cfg.mcs, len(data_rbs), self.cfg.data_symbols_per_subframe())
        mac_bytes = pdu.size_bytes + self.cfg.header_bytes_mac
        if 8 * mac_bytes > tbs:
            self.grant_overflow += 1
            self._advance_after_tx(t, transmitted=False)
            return None
        finalize_mac(pdu, t, self.cfg.header_bytes_mac)
        tb = TransportBlock(
            tx_id=self.vehicle_id,
            subframe=t,
            subchannels=res.subchannels,
            mcs=self.cfg.mcs,
            payload_bits=8 * pdu.size_bytes,
            padding_bits=tbs - 8 * pdu.size_bytes,
            data_rbs=data_rbs,
            pdu=pdu,
            sci=build_sci(res, self.cfg.mcs, self.vehicle_id),
        )
        self.history.observe_own_tx(t)
        self._advance_after_tx(t, transmitted=True)
        return tb

    def _advance_after_tx(self, t: int, transmitted: bool) -> None:
        res = self.reservation
        assert res is not None
        if not transmitted:
            res.subframe = t + res.period_ms
            return
        res.reselection_counter -= 1
        if res.reselection_counter > 0:
            res.subframe = t + res.period_ms
            return
        if self.rng.random() < self.cfg.sps_keep_probability:
            res.subframe = t + res.period_ms
            res.reselection_counter = int(self.rng.integers(5, 16))
        else:
            # the reservation lapses; the next packet arrival triggers a fresh
            # sense() + select_resource() anchored at its own arrival time,
            # which keeps the queueing wait bounded by the selection window
            self.reservation = None
