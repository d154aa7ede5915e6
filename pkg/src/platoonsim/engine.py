"""Deterministic discrete-event loop at 1 ms subframe granularity.

Time advances in integer subframes. Events at equal times fire in scheduling
order (a monotone sequence number breaks ties), which pins the per-subframe
order: shadowing block updates, then application arrivals, then the subframe
tick that carries MAC emissions and reception. Transmissions occupying
subframe t are processed at its end and delivered with receive timestamps
t + 1, ahead of any event scheduled at t + 1.

Randomness is split into one substream per (module, vehicle or link): the
master seed XOR a stable 64-bit hash of "module:id", so toggling one
subsystem never perturbs another's draws.
"""

from __future__ import annotations

import enum
import hashlib
import heapq
from collections import Counter
from dataclasses import dataclass

import numpy as np

from . import stack as stack_mod
from .channel import ShadowingState, dbm_to_mw, pathloss_db, sinr_db, update_shadowing
from .config import DecodeModel, ScenarioConfig, TrafficPattern, scenario_id, validate
from .mac_sps import ReservationRecord, SpsScheduler, decode_sci
from .metrics import MetricsStore
from .mobility import Mobility
from .phy import TransportBlock, build_grid, decode
from .stack import Layer, RlcUmRxState, TxStack, rlc_reordering_expired, rlc_um_rx, rx_chain


class EngineError(ValueError):
    pass


class EventKind(enum.Enum):
    APP_ARRIVAL = "APP_ARRIVAL"
    SUBFRAME_TICK = "SUBFRAME_TICK"
    SHADOW_BLOCK = "SHADOW_BLOCK"
    RLC_TIMER = "RLC_TIMER"
    SIM_END = "SIM_END"


@dataclass(frozen=True)
class Event:
    time_ms: int
    seq: int
    kind: EventKind
    payload: object = None


def derive_rng(master_seed: int, label: str) -> np.random.Generator:
    """Substream for one (module, id) pair: master seed XOR sha256-based 64-bit hash."""
    h = int.from_bytes(hashlib.sha256(label.encode()).digest()[:8], "big")
    return np.random.default_rng(master_seed ^ h)


class ScenarioRun:
    """One seeded scenario: owns every per-vehicle state, produces a MetricsStore."""

    def __init__(self, cfg: ScenarioConfig, trace_text: str | None = None, keep_trace: bool = False):
        validate(cfg)
        self.cfg = cfg
        self.now = 0
        self._seq = 0
        self._heap: list[tuple[int, int, Event]] = []
        self.event_counts: Counter[EventKind] = Counter()
        self.trace: list[tuple[int, int, EventKind]] | None = [] if keep_trace else None

        self.mobility = Mobility(cfg, trace_text)
        self.grid = build_grid(cfg)
        self.metrics = MetricsStore(
            scenario_id=scenario_id(cfg),
            seed=cfg.seed,
            n_vehicles=cfg.n_vehicles,
            sim_time_ms=cfg.sim_time_ms,
        )
        if cfg.traffic_pattern is TrafficPattern.LEADER_BROADCAST:
            self.senders = [1]
        else:
            self.senders = list(range(1, cfg.n_vehicles + 1))
        self.tx_stacks = {v: TxStack(cfg, v) for v in self.senders}
        self.schedulers = {
            v: SpsScheduler(cfg, self.grid, v, derive_rng(cfg.seed, f"sps:{v}"))
            for v in self.senders
        }
        self._decode_rngs = {
            v: derive_rng(cfg.seed, f"phy:{v}") for v in range(1, cfg.n_vehicles + 1)
        }
        self._shadow_states: dict[tuple[int, int], ShadowingState] = {}
        self._shadow_rngs: dict[tuple[int, int], np.random.Generator] = {}
        self.rlc_rx: dict[tuple[int, int], RlcUmRxState] = {}
        self._rlc_timer_pending: dict[tuple[int, int], int] = {}
        self._noise_mw = dbm_to_mw(cfg.noise_dbm)

    # -- event queue -------------------------------------------------------

    def schedule(self, time_ms: int, kind: EventKind, payload: object = None) -> Event:
        if time_ms < self.now:
            raise EngineError(f"cannot schedule {kind.name} at {time_ms} ms; now is {self.now} ms")
        event = Event(time_ms=time_ms, seq=self._seq, kind=kind, payload=payload)
        self._seq += 1
        heapq.heappush(self._heap, (time_ms, event.seq, event))
        return event

    def prime(self) -> None:
        """Schedule the initial event set for a full run."""
        cfg = self.cfg
        if cfg.shadowing_enabled:
            self.schedule(0, EventKind.SHADOW_BLOCK)
        for v in self.senders:
            self.schedule(0, EventKind.APP_ARRIVAL, v)
        self.schedule(0, EventKind.SUBFRAME_TICK)
        self.schedule(cfg.sim_time_ms, EventKind.SIM_END)

    def run_until(self, t_end: int) -> MetricsStore:
        """Process every event with time <= t_end; returns the metrics store."""
        if t_end <= 0:
            raise EngineError(f"t_end must be > 0, got {t_end}")
        while self._heap and self._heap[0][0] <= t_end:
            _, _, event = heapq.heappop(self._heap)
            self.now = event.time_ms
            self.event_counts[event.kind] += 1
            if self.trace is not None:
                self.trace.append((event.time_ms, event.seq, event.kind))
            self._dispatch(event)
        return self.metrics

    def run(self) -> MetricsStore:
        self.prime()
        return self.run_until(self.cfg.sim_time_ms)

    # -- handlers ------------------------------------------------------------

    def _dispatch(self, event: Event) -> None:
        if event.kind is EventKind.SUBFRAME_TICK:
            self._on_tick(event.time_ms)
        elif event.kind is EventKind.APP_ARRIVAL:
            self._on_app_arrival(event.time_ms, event.payload)
        elif event.kind is EventKind.SHADOW_BLOCK:
            self._on_shadow_block(event.time_ms)
        elif event.kind is EventKind.RLC_TIMER:
            self._on_rlc_timer(event.time_ms, event.payload)
        # SIM_END is a marker; the loop drains everything up to t_end anyway

    def _on_app_arrival(self, t: int, vehicle: int) -> None:
        self.tx_stacks[vehicle].send(t)
        for rx in range(1, self.cfg.n_vehicles + 1):
            if rx != vehicle:
                self.metrics.count_tx(rx)
        self.schedulers[vehicle].ensure_reservation(t)
        nxt = t + self.cfg.app_interval_ms
        if nxt < self.cfg.sim_time_ms:
            self.schedule(nxt, EventKind.APP_ARRIVAL, vehicle)

    def _on_tick(self, t: int) -> None:
        emissions: list[TransportBlock] = []
        for v in self.senders:
            tb = self.schedulers[v].on_subframe(t, self.tx_stacks[v])
            if tb is not None:
                emissions.append(tb)
        if emissions:
            self._propagate(t, emissions)
        if t + 1 <= self.cfg.sim_time_ms:
            self.schedule(t + 1, EventKind.SUBFRAME_TICK)

    def _on_shadow_block(self, t: int) -> None:
        cfg = self.cfg
        for (tx, rx), state in self._shadow_states.items():
            p_tx = self.mobility.position(tx, t)
            p_rx = self.mobility.position(rx, t)
            d_n = 0.5 * (abs(p_tx - state.last_positions[0]) + abs(p_rx - state.last_positions[1]))
            innovation = self._shadow_rngs[(tx, rx)].normal(0.0, cfg.shadow_sigma_db)
            update_shadowing(state, d_n, innovation)
            state.last_positions = (p_tx, p_rx)
        nxt = t + cfg.shadow_block_ms
        if nxt <= cfg.sim_time_ms:
            self.schedule(nxt, EventKind.SHADOW_BLOCK)

    def _shadow_db(self, tx: int, rx: int, t: int) -> float:
        cfg = self.cfg
        if not cfg.shadowing_enabled:
            return 0.0
        key = (tx, rx)
        state = self._shadow_states.get(key)
        if state is None:
            rng = derive_rng(cfg.seed, f"shadowing:{tx}:{rx}")
            state = ShadowingState(
                tx_id=tx,
                rx_id=rx,
                d_cor_m=cfg.d_cor_m,
                s_db=float(rng.normal(0.0, cfg.shadow_sigma_db)),
                last_positions=(self.mobility.position(tx, t), self.mobility.position(rx, t)),
            )
            self._shadow_states[key] = state
            self._shadow_rngs[key] = rng
        return state.s_db

    def _propagate(self, t: int, emissions: list[TransportBlock]) -> None:
        cfg = self.cfg
        emitters = {tb.tx_id for tb in emissions}
        rb_sets = [set(tb.data_rbs) for tb in emissions]
        for rx in range(1, cfg.n_vehicles + 1):
            if rx in emitters:
                continue  # half-duplex: a transmitting vehicle senses and receives nothing
            powers = []
            for tb in emissions:
                pl = pathloss_db(
                    self.mobility.pair_distance(tb.tx_id, rx, t),
                    cfg.pathloss_model,
                    cfg.carrier_ghz,
                )
                powers.append(cfg.tx_power_dbm - pl - self._shadow_db(tb.tx_id, rx, t))

            scheduler = self.schedulers.get(rx)
            if scheduler is not None:
                rssi = [self._noise_mw] * self.grid.n_subchannels
                for tb, p in zip(emissions, powers):
                    mw = dbm_to_mw(p)
                    for c in tb.subchannels:
                        rssi[c] += mw
                scheduler.history.observe_busy(t, rssi)

            for i, tb in enumerate(emissions):
                interferers = [
                    powers[j]
                    for j in range(len(emissions))
                    if j != i and rb_sets[i] & rb_sets[j]
                ]
                sinr = sinr_db(powers[i], interferers, cfg.noise_dbm)
                if scheduler is not None and tb.sci is not None:
                    sci = decode_sci(
                        tb.sci, sinr, cfg.sinr_margin_db, cfg.sci_threshold_delta_db
                    )
                    if sci is not None:
                        scheduler.history.add_reservation(
                            ReservationRecord(
                                subframe=t,
                                subchannels=sci.subchannels,
                                tx_id=sci.tx_id,
                                period_ms=sci.period_ms,
                                rsrp_dbm=powers[i],
                            )
                        )
                ok = decode(
                    sinr,
                    tb.mcs,
                    rng=self._decode_rngs[rx],
                    probabilistic=cfg.decode_model is DecodeModel.LOGISTIC,
                    beta_db=cfg.logistic_beta_db,
                    margin_db=cfg.sinr_margin_db,
                )
                if ok:
                    self._deliver(rx, tb, t)

    def _deliver(self, rx: int, tb: TransportBlock, t: int) -> None:
        t_rx = t + 1
        pdu = tb.pdu
        assert isinstance(pdu, stack_mod.TaggedPacket)
        self.metrics.record(rx, Layer.MAC, t_rx - pdu.tag(Layer.MAC), tb.tbs)
        key = (rx, tb.tx_id)
        state = self.rlc_rx.get(key)
        if state is None:
            state = RlcUmRxState(t_reordering_ms=self.cfg.t_reordering_ms)
            self.rlc_rx[key] = state
        released = rlc_um_rx(state, pdu, t_rx)
        for packet in released:
            for layer, delay, bits in rx_chain(packet, t_rx):
                self.metrics.record(rx, layer, delay, bits)
        self._sync_rlc_timer(key, state)

    def _sync_rlc_timer(self, key: tuple[int, int], state: RlcUmRxState) -> None:
        if state.deadline_ms is None:
            return
        deadline = int(state.deadline_ms)
        if deadline <= self.cfg.sim_time_ms and self._rlc_timer_pending.get(key) != deadline:
            self.schedule(deadline, EventKind.RLC_TIMER, (key, deadline))
            self._rlc_timer_pending[key] = deadline

    def _on_rlc_timer(self, t: int, payload) -> None:
        key, deadline = payload
        state = self.rlc_rx.get(key)
        if state is None or state.deadline_ms != deadline:
            return  # cancelled or superseded; lazy cancellation
        rx = key[0]
        released = rlc_reordering_expired(state, t)
        for packet in released:
            for layer, delay, bits in rx_chain(packet, t):
                self.metrics.record(rx, layer, delay, bits)
        self._sync_rlc_timer(key, state)

    def grant_overflows(self) -> dict[int, int]:
        return {v: s.grant_overflow for v, s in self.schedulers.items() if s.grant_overflow}


def run_scenario(cfg: ScenarioConfig, trace_text: str | None = None) -> MetricsStore:
    """Convenience wrapper: build, prime, and run one scenario to completion."""
    run = ScenarioRun(cfg, trace_text=trace_text)
    store = run.run()
    for v, count in run.grant_overflows().items():
        store.grant_overflow[v] = count
    return store
