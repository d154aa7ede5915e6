"""Layered transmit/receive pipeline: APP, UDP-like transport, IP-like network,
PDCP, RLC-UM, MAC.

Each packet is stamped with its entry time at every transmit layer; per-layer
delay at the receiver is the difference between upward-crossing time and the
matching tag, so time spent queued for an SPS occasion counts at every layer.
RLC-UM runs a 5-bit sequence space with a reordering timer and no
retransmission.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

from .config import ScenarioConfig

RLC_SN_MOD = 32
RLC_WINDOW = RLC_SN_MOD // 2


class Layer(enum.Enum):
    APP = "APP"
    TRANSPORT = "TRANSPORT"
    NETWORK = "NETWORK"
    PDCP = "PDCP"
    RLC = "RLC"
    MAC = "MAC"


# upward order at the receiver / encapsulation order at the transmitter
LAYER_ORDER = (Layer.APP, Layer.TRANSPORT, Layer.NETWORK, Layer.PDCP, Layer.RLC, Layer.MAC)

BROADCAST = 0


class StackError(ValueError):
    pass


@dataclass
class TaggedPacket:
    """Application payload plus per-layer entry timestamps and header bookkeeping."""

    app_seq: int
    src: int
    dst: int = BROADCAST
    payload_bytes: int = 0
    size_bytes: int = 0
    rlc_sn: int | None = None
    t_app: float | None = None
    t_transport: float | None = None
    t_network: float | None = None
    t_pdcp: float | None = None
    t_rlc: float | None = None
    t_mac: float | None = None
    header_bytes: dict[Layer, int] = field(default_factory=dict)

    def tag(self, layer: Layer) -> float:
        value = {
            Layer.APP: self.t_app,
            Layer.TRANSPORT: self.t_transport,
            Layer.NETWORK: self.t_network,
            Layer.PDCP: self.t_pdcp,
            Layer.RLC: self.t_rlc,
            Layer.MAC: self.t_mac,
        }[layer]
        if value is None:
            raise StackError(f"packet {self.app_seq} has no {layer.name} tag yet")
        return value

    def bytes_at(self, layer: Layer) -> int:
        """Cumulative size at a layer: payload plus headers of that layer and below it."""
        total = self.payload_bytes
        for lyr in LAYER_ORDER[1:]:
            total += self.header_bytes.get(lyr, 0)
            if lyr is layer:
                break
        return self.payload_bytes if layer is Layer.APP else total


def app_send(src: int, payload_bytes: int, t: float, app_seq: int) -> TaggedPacket:
    """Create a broadcast packet entering the stack at time t."""
    if payload_bytes < 1:
        raise StackError(f"payload must be >= 1 byte, got {payload_bytes}")
    return TaggedPacket(
        app_seq=app_seq,
        src=src,
        payload_bytes=payload_bytes,
        size_bytes=payload_bytes,
        t_app=t,
    )


def encapsulate(packet: TaggedPacket, layer: Layer, t: float, header_bytes: int) -> TaggedPacket:
    """Add one layer's header and stamp its entry tag. MAC stamping happens at emission."""
    if layer is Layer.APP:
        raise StackError("APP does not encapsulate; use app_send")
    packet.size_bytes += header_bytes
    packet.header_bytes[layer] = header_bytes
    if layer is Layer.TRANSPORT:
        packet.t_transport = t
    elif layer is Layer.NETWORK:
        packet.t_network = t
    elif layer is Layer.PDCP:
        packet.t_pdcp = t
    elif layer is Layer.RLC:
        packet.t_rlc = t
    elif layer is Layer.MAC:
        packet.t_mac = t
    return packet


class TxStack:
    """Per-vehicle transmit side: encapsulation chain and the MAC-facing queue."""

    def __init__(self, cfg: ScenarioConfig, vehicle_id: int):
        self.cfg = cfg
        self.vehicle_id = vehicle_id
        self._next_seq = 0
        self._next_sn = 0
        self.queue: list[TaggedPacket] = []

    def send(self, t: float, payload_bytes: int | None = None) -> TaggedPacket:
        """Push one application packet down to RLC and queue it for the next grant."""
        cfg = self.cfg
        pkt = app_send(
            self.vehicle_id,
            cfg.app_packet_bytes if payload_bytes is None else payload_bytes,
            t,
            self._next_seq,
        )
        self._next_seq += 1
        encapsulate(pkt, Layer.TRANSPORT, t, cfg.header_bytes_transport)
        encapsulate(pkt, Layer.NETWORK, t, cfg.header_bytes_network)
        encapsulate(pkt, Layer.PDCP, t, cfg.header_bytes_pdcp)
        encapsulate(pkt, Layer.RLC, t, cfg.header_bytes_rlc)
        pkt.rlc_sn = self._next_sn
        self._next_sn = (self._next_sn + 1) % RLC_SN_MOD
        self.queue.append(pkt)
        return pkt

    def pop_for_grant(self) -> TaggedPacket | None:
        if not self.queue:
            return None
        return self.queue.pop(0)


def finalize_mac(packet: TaggedPacket, t: float, header_bytes: int) -> TaggedPacket:
    """MAC encapsulation at grid emission time."""
    return encapsulate(packet, Layer.MAC, t, header_bytes)


@dataclass
class RlcUmRxState:
    """RLC-UM receive state for one (receiver, transmitter) flow."""

    t_reordering_ms: int
    expected_sn: int = 0
    buffer: dict[int, TaggedPacket] = field(default_factory=dict)
    deadline_ms: float | None = None

    def _ahead(self, sn: int) -> int:
        return (sn - self.expected_sn) % RLC_SN_MOD


def _drain_in_order(state: RlcUmRxState) -> list[TaggedPacket]:
    out = []
    while state.expected_sn in state.buffer:
        out.append(state.buffer.pop(state.expected_sn))
        state.expected_sn = (state.expected_sn + 1) % RLC_SN_MOD
    return out


def rlc_um_rx(state: RlcUmRxState, packet: TaggedPacket, t: float) -> list[TaggedPacket]:
    """Feed one decoded PDU; returns the packets released upward, in order.

    In-order PDUs pass straight through. An out-of-order PDU is held and starts
    the reordering timer; when the gap fills, everything consecutive is
    released and the timer is cancelled (or restarted if a later gap remains).
    PDUs outside the reordering window are treated as stale and discarded.
    """
    sn = packet.rlc_sn
    if sn is None:
        raise StackError("PDU reached RLC without a sequence number")
    ahead = state._ahead(sn)
    if ahead >= RLC_WINDOW:
        return []  # stale or duplicate of an already-delivered SN
    if ahead == 0:
        state.expected_sn = (sn + 1) % RLC_SN_MOD
        delivered = [packet] + _drain_in_order(state)
        state.deadline_ms = t + state.t_reordering_ms if state.buffer else None
        return delivered
    if sn in state.buffer:
        return []  # duplicate of a held SN
    state.buffer[sn] = packet
    if state.deadline_ms is None:
        state.deadline_ms = t + state.t_reordering_ms
    return []


def rlc_reordering_expired(state: RlcUmRxState, t: float) -> list[TaggedPacket]:
    """t-Reordering expiry: skip the missing SNs and resume from the next held one."""
    state.deadline_ms = None
    if not state.buffer:
        return []
    nearest = min(state.buffer, key=state._ahead)
    state.expected_sn = nearest  # SNs in between are declared lost
    delivered = _drain_in_order(state)
    if state.buffer:
        state.deadline_ms = t + state.t_reordering_ms
    return delivered


def rx_chain(packet: TaggedPacket, deliver_t: float) -> list[tuple[Layer, float, int]]:
    """Per-layer (layer, delay_ms, bits) records for a packet released by RLC at deliver_t.

    The upper layers cross in the same subframe, so every record shares the
    delivery time; delays differ only through the transmit-side tags. The MAC
    record is produced at decode time by the engine, not here.
    """
    records = []
    for layer in (Layer.RLC, Layer.PDCP, Layer.NETWORK, Layer.TRANSPORT, Layer.APP):
        records.append((layer, deliver_t - packet.tag(layer), 8 * packet.bytes_at(layer)))
    return records
