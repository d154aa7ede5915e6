"""Scenario configuration: defaults, validation, and the flat key=value file format.

A scenario file is a UTF-8 text document of ``key = value`` lines with ``#``
comments. Every key matches a ``ScenarioConfig`` field name; unknown keys are
rejected. Missing keys take the baseline platooning defaults.
"""

from __future__ import annotations

import enum
import hashlib
from dataclasses import dataclass, fields, replace


class ConfigError(ValueError):
    """Raised for syntax errors, unknown keys, or invariant violations."""


class GridLayout(enum.Enum):
    R12 = "R12"
    R14 = "R14"
    HYBRID = "HYBRID"


class TrafficPattern(enum.Enum):
    LEADER_BROADCAST = "LEADER_BROADCAST"
    ALL_BROADCAST = "ALL_BROADCAST"


class MobilitySource(enum.Enum):
    PLATOON_MODEL = "PLATOON_MODEL"
    NS2_TRACE = "NS2_TRACE"


class PathlossModel(enum.Enum):
    WINNER_B1 = "WINNER_B1"
    FREE_SPACE = "FREE_SPACE"


class DecodeModel(enum.Enum):
    THRESHOLD = "THRESHOLD"
    LOGISTIC = "LOGISTIC"


@dataclass(frozen=True)
class ScenarioConfig:
    """All tunables of a run. Immutable after parse; safe to share across runs."""

    # platoon geometry and traffic
    n_vehicles: int = 9
    inter_vehicle_gap_m: float = 3.0
    vehicle_length_m: float = 4.0
    speed_mps: float = 14.0  # 50.4 km/h
    sim_time_ms: int = 45000
    app_packet_bytes: int = 72
    app_interval_ms: int = 20
    traffic_pattern: TrafficPattern = TrafficPattern.LEADER_BROADCAST
    mobility_source: MobilitySource = MobilitySource.PLATOON_MODEL
    trace_path: str | None = None

    # radio link
    mcs: int = 4
    n_rbs: int = 24
    tx_power_dbm: float = 23.0
    noise_dbm: float = -116.0
    antenna_height_m: float = 1.5
    carrier_ghz: float = 5.9
    pathloss_model: PathlossModel = PathlossModel.WINNER_B1
    sinr_margin_db: float = 3.0
    decode_model: DecodeModel = DecodeModel.THRESHOLD
    logistic_beta_db: float = 0.5
    sci_threshold_delta_db: float = 3.0
    dmrs_symbols: int = 4

    # shadowing process
    shadowing_enabled: bool = True
    shadow_sigma_db: float = 3.0
    d_cor_m: float = 25.0
    shadow_block_ms: int = 100

    # resource grid
    grid_layout: GridLayout = GridLayout.HYBRID
    n_rb_total: int = 50
    subchannel_size_rb: int = 10
    pscch_rb_per_subchannel: int = 2
    pscch_pool_rb: int = 10

    # MAC sensing-based SPS
    sps_sensing_window_ms: int = 1000
    sps_rsrp_threshold_dbm: float = -110.0
    sps_keep_probability: float = 0.0
    sps_selection_t1_ms: int = 1
    sps_selection_t2_ms: int = 0  # 0 = track app_interval_ms

    # layered stack
    header_bytes_transport: int = 8
    header_bytes_network: int = 20
    header_bytes_pdcp: int = 2
    header_bytes_rlc: int = 1
    header_bytes_mac: int = 2
    t_reordering_ms: int = 25

    seed: int = 1

    def selection_t2_ms(self) -> int:
        return self.sps_selection_t2_ms if self.sps_selection_t2_ms > 0 else self.app_interval_ms

    def stack_overhead_bytes(self) -> int:
        return (
            self.header_bytes_transport
            + self.header_bytes_network
            + self.header_bytes_pdcp
            + self.header_bytes_rlc
            + self.header_bytes_mac
        )

    def data_symbols_per_subframe(self) -> int:
        # 14 OFDM symbols minus DMRS minus 1 guard symbol
        return 14 - self.dmrs_symbols - 1


def default_scenario() -> ScenarioConfig:
    """Baseline platooning scenario: 9 vehicles, 72 B / 20 ms traffic, 45 s."""
    cfg = ScenarioConfig()
    validate(cfg)
    return cfg


def validate(cfg: ScenarioConfig) -> None:
    """Check every config invariant; raises ConfigError naming the offending field."""
    checks = [
        (cfg.n_vehicles >= 2, "n_vehicles must be >= 2"),
        (cfg.inter_vehicle_gap_m > 0, "inter_vehicle_gap_m must be > 0"),
        (cfg.vehicle_length_m >= 0, "vehicle_length_m must be >= 0"),
        (cfg.speed_mps >= 0, "speed_mps must be >= 0"),
        (cfg.sim_time_ms > 0, "sim_time_ms must be > 0"),
        (cfg.app_packet_bytes >= 1, "app_packet_bytes must be >= 1"),
        (cfg.app_interval_ms >= 1, "app_interval_ms must be >= 1"),
        (0 <= cfg.mcs <= 28, "mcs must be in 0..28"),
        (cfg.n_rbs >= 1, "n_rbs must be >= 1"),
        (2 <= cfg.dmrs_symbols <= 4, "dmrs_symbols must be in 2..4"),
        (cfg.logistic_beta_db > 0, "logistic_beta_db must be > 0"),
        (cfg.shadow_sigma_db >= 0, "shadow_sigma_db must be >= 0"),
        (cfg.d_cor_m > 0, "d_cor_m must be > 0"),
        (cfg.shadow_block_ms >= 1, "shadow_block_ms must be a positive whole number of subframes"),
        (cfg.n_rb_total >= 1, "n_rb_total must be >= 1"),
        (cfg.subchannel_size_rb >= 1, "subchannel_size_rb must be >= 1"),
        (cfg.pscch_rb_per_subchannel >= 0, "pscch_rb_per_subchannel must be >= 0"),
        (cfg.pscch_pool_rb >= 0, "pscch_pool_rb must be >= 0"),
        (cfg.sps_sensing_window_ms >= 1, "sps_sensing_window_ms must be >= 1"),
        (0.0 <= cfg.sps_keep_probability <= 0.8, "sps_keep_probability must be in [0, 0.8]"),
        (cfg.sps_selection_t1_ms >= 1, "sps_selection_t1_ms must be >= 1"),
        (
            cfg.sps_selection_t2_ms == 0 or cfg.sps_selection_t2_ms >= cfg.sps_selection_t1_ms,
            "sps_selection_t2_ms must be 0 (auto) or >= sps_selection_t1_ms",
        ),
        (cfg.header_bytes_transport >= 0, "header_bytes_transport must be >= 0"),
        (cfg.header_bytes_network >= 0, "header_bytes_network must be >= 0"),
        (cfg.header_bytes_pdcp >= 0, "header_bytes_pdcp must be >= 0"),
        (cfg.header_bytes_rlc >= 0, "header_bytes_rlc must be >= 0"),
        (cfg.header_bytes_mac >= 0, "header_bytes_mac must be >= 0"),
        (cfg.t_reordering_ms >= 1, "t_reordering_ms must be >= 1"),
        (cfg.seed >= 0, "seed must be >= 0"),
        (
            cfg.mobility_source is not MobilitySource.NS2_TRACE or bool(cfg.trace_path),
            "trace_path is required when mobility_source = NS2_TRACE",
        ),
    ]
    for ok, message in checks:
        if not ok:
            raise ConfigError(message)


_FIELDS = {f.name: f for f in fields(ScenarioConfig)}
_ENUM_FIELDS = {
    "grid_layout": GridLayout,
    "traffic_pattern": TrafficPattern,
    "mobility_source": MobilitySource,
    "pathloss_model": PathlossModel,
    "decode_model": DecodeModel,
}


def _convert(key: str, raw: str, lineno: int):
    f = _FIELDS[key]
    if key in _ENUM_FIELDS:
        enum_cls = _ENUM_FIELDS[key]
        try:
            return enum_cls[raw]
        except KeyError:
            allowed = ", ".join(m.name for m in enum_cls)
            raise ConfigError(f"line {lineno}: {key} must be one of {allowed}, got {raw!r}") from None
    if f.type in ("int", int):
        try:
            return int(raw)
        except ValueError:
            raise ConfigError(f"line {lineno}: {key} expects an integer, got {raw!r}") from None
    if f.type in ("float", float):
        try:
            return float(raw)
        except ValueError:
            raise ConfigError(f"line {lineno}: {key} expects a number, got {raw!r}") from None
    if f.type in ("bool", bool):
        lowered = raw.lower()
        if lowered in ("true", "1", "yes", "on"):
            return True
        if lowered in ("false", "0", "no", "off"):
            return False
        raise ConfigError(f"line {lineno}: {key} expects true/false, got {raw!r}")
    # trace_path: optional string
    return raw or None


def parse_scenario(text: str) -> ScenarioConfig:
    """Parse a key=value document, fill missing keys from defaults, validate."""
    overrides: dict[str, object] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        # inline comments start at a '#' preceded by whitespace
        for i, ch in enumerate(stripped):
            if ch == "#" and i > 0 and stripped[i - 1] in " \t":
                stripped = stripped[:i].strip()
                break
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line.strip()!r}")
        key, _, raw = stripped.partition("=")
        key = key.strip()
        raw = raw.strip()
        if key not in _FIELDS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in overrides:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        overrides[key] = _convert(key, raw, lineno)
    cfg = replace(ScenarioConfig(), **overrides)
    validate(cfg)
    return cfg


def render_scenario(cfg: ScenarioConfig) -> str:
    """Serialize a config so that parse_scenario(render_scenario(cfg)) == cfg."""
    lines = []
    for f in fields(ScenarioConfig):
        value = getattr(cfg, f.name)
        if value is None:
            continue
        if isinstance(value, enum.Enum):
            text = value.name
        elif isinstance(value, bool):
            text = "true" if value else "false"
        elif isinstance(value, float):
            text = repr(value)
        else:
            text = str(value)
        lines.append(f"{f.name} = {text}")
    return "\n".join(lines) + "\n"


def scenario_id(cfg: ScenarioConfig) -> str:
    """Stable 12-hex-char id of the config (seed included), used to join CSV outputs."""
    return hashlib.sha256(render_scenario(cfg).encode()).hexdigest()[:12]
