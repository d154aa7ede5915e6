"""Vehicle positions over time: analytic platoon chain or imported ns2-movements trace.

Geometry is one-dimensional (straight highway). Vehicle 1 leads; follower i
trails by (i-1) * (gap + vehicle length), gap measured bumper to bumper.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .config import MobilitySource, ScenarioConfig


class MobilityError(ValueError):
    pass


@dataclass
class Trajectory:
    """Piecewise-linear 1-D trajectory; position held constant past the last waypoint."""

    vehicle_id: int
    waypoints: list[tuple[float, float]] = field(default_factory=list)  # (time_ms, x_m)

    def position(self, t_ms: float) -> float:
        wp = self.waypoints
        if not wp:
            raise MobilityError(f"vehicle {self.vehicle_id}: trajectory has no waypoints")
        if t_ms <= wp[0][0]:
            return wp[0][1]
        for (t0, x0), (t1, x1) in zip(wp, wp[1:]):
            if t_ms <= t1:
                if t1 == t0:
                    return x1
                return x0 + (x1 - x0) * (t_ms - t0) / (t1 - t0)
        return wp[-1][1]


class Mobility:
    """Position lookups for all vehicles of a scenario."""

    def __init__(self, cfg: ScenarioConfig, trace_text: str | None = None):
        self.cfg = cfg
        self.n_vehicles = cfg.n_vehicles
        self.sim_time_ms = cfg.sim_time_ms
        self._spacing = cfg.inter_vehicle_gap_m + cfg.vehicle_length_m
        self._trajectories: list[Trajectory] | None = None
        if cfg.mobility_source is MobilitySource.NS2_TRACE:
            if trace_text is None:
                raise MobilityError("NS2_TRACE mobility requires the trace text")
            self._trajectories = load_ns2_trace(trace_text, cfg.n_vehicles)

    def _check(self, vehicle_id: int, t_ms: float) -> None:
        if not 1 <= vehicle_id <= self.n_vehicles:
            raise MobilityError(f"vehicle_id {vehicle_id} out of range 1..{self.n_vehicles}")
        if not 0 <= t_ms <= self.sim_time_ms:
            raise MobilityError(f"time {t_ms} ms outside [0, {self.sim_time_ms}]")

    def position(self, vehicle_id: int, t_ms: float) -> float:
        self._check(vehicle_id, t_ms)
        if self._trajectories is not None:
            return self._trajectories[vehicle_id - 1].position(t_ms)
        return self.cfg.speed_mps * (t_ms / 1000.0) - (vehicle_id - 1) * self._spacing

    def pair_distance(self, i: int, j: int, t_ms: float) -> float:
        return abs(self.position(i, t_ms) - self.position(j, t_ms))


# $node_(3) set X_ 12.5        (also Y_ / Z_, ignored)
_RE_SET = re.compile(r"^\$node_\((\d+)\)\s+set\s+([XYZ])_\s+(-?[\d.eE+]+)$")
# $ns_ at 10.0 "$node_(3) setdest 120.0 0.0 14.0"
_RE_SETDEST = re.compile(
    r"^\$ns_\s+at\s+(-?[\d.eE+]+)\s+\"\$node_\((\d+)\)\s+setdest\s+"
    r"(-?[\d.eE+]+)\s+(-?[\d.eE+]+)\s+(-?[\d.eE+]+)\"$"
)


def load_ns2_trace(text: str, n_vehicles: int) -> list[Trajectory]:
    """Parse the ns2-movements subset (set X_/Y_/Z_ and setdest) into trajectories.

    Node indices are 0-based in the trace and map to vehicle_id = index + 1.
    Only X is used; the highway is 1-D.
    """
    initial_x: dict[int, float] = {}
    moves: list[tuple[float, int, float, float]] = []  # (t_s, node, dest_x, speed)
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        m = _RE_SET.match(stripped)
        if m:
            node, axis, value = int(m.group(1)), m.group(2), float(m.group(3))
            if node >= n_vehicles:
                raise MobilityError(f"line {lineno}: node index {node} >= n_vehicles {n_vehicles}")
            if axis == "X":
                initial_x[node] = value
            continue
        m = _RE_SETDEST.match(stripped)
        if m:
            t_s, node = float(m.group(1)), int(m.group(2))
            dest_x, speed = float(m.group(3)), float(m.group(5))
            if node >= n_vehicles:
                raise MobilityError(f"line {lineno}: node index {node} >= n_vehicles {n_vehicles}")
            if speed <= 0:
                raise MobilityError(f"line {lineno}: setdest speed must be > 0")
            moves.append((t_s, node, dest_x, speed))
            continue
        raise MobilityError(f"line {lineno}: unrecognized ns2 directive {stripped!r}")

    trajectories = []
    for node in range(n_vehicles):
        if node not in initial_x:
            raise MobilityError(f"node {node}: missing initial '$node_({node}) set X_' line")
        traj = Trajectory(vehicle_id=node + 1, waypoints=[(0.0, initial_x[node])])
        trajectories.append(traj)

    for t_s, node, dest_x, speed in sorted(moves, key=lambda m: (m[0], m[1])):
        traj = trajectories[node]
        t_ms = t_s * 1000.0
        x_now = traj.position(t_ms)
        # a new setdest preempts any motion still in progress
        while traj.waypoints and traj.waypoints[-1][0] > t_ms:
            traj.waypoints.pop()
        traj.waypoints.append((t_ms, x_now))
        travel_ms = abs(dest_x - x_now) / speed * 1000.0
        traj.waypoints.append((t_ms + travel_ms, dest_x))
    return trajectories
