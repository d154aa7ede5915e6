"""Command-line entry points: single runs and sweeps, all emitting deterministic CSV.

Exit codes: 0 success, 1 runtime failure (bad config content, IO), 2 usage.
CSV fields are never quoted; floats carry six significant digits.
"""

from __future__ import annotations

import argparse
import hashlib
import sys
from dataclasses import replace
from pathlib import Path

from .config import (
    ConfigError,
    ScenarioConfig,
    default_scenario,
    parse_scenario,
    render_scenario,
    scenario_id,
)
from .engine import run_scenario
from .metrics import LEVEL_REQUIREMENTS, MetricsStore, layer_profile, pdr, platoon_length
from .mobility import MobilityError
from .phy import min_rbs
from .stack import LAYER_ORDER


def _fmt(value) -> str:
    if isinstance(value, float):
        return format(value, ".6g")
    return str(value)


def _write_csv(path: Path, header: list[str], rows: list[tuple]) -> None:
    lines = [",".join(header)]
    lines.extend(",".join(_fmt(v) for v in row) for row in rows)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _load_config(path: str | None, seed: int | None) -> ScenarioConfig:
    if path is None:
        cfg = default_scenario()
    else:
        p = Path(path)
        if not p.is_file():
            print(f"error: config file not found: {p}", file=sys.stderr)
            raise SystemExit(2)
        cfg = parse_scenario(p.read_text(encoding="utf-8"))
    if seed is not None:
        cfg = replace(cfg, seed=seed)
    return cfg


def _run_one(cfg: ScenarioConfig) -> MetricsStore:
    trace_text = None
    if cfg.trace_path is not None:
        trace_file = Path(cfg.trace_path)
        if not trace_file.is_file():
            print(f"error: mobility trace not found: {trace_file}", file=sys.stderr)
            raise SystemExit(1)
        trace_text = trace_file.read_text(encoding="utf-8")
    return run_scenario(cfg, trace_text=trace_text)


def _pdr_rows(store: MetricsStore, prefix: tuple = ()) -> list[tuple]:
    rows = []
    for vehicle in store.receivers():
        rows.append(
            prefix
            + (
                store.scenario_id,
                vehicle,
                store.tx_count[vehicle],
                store.rx_count(vehicle),
                pdr(store, vehicle),
            )
        )
    return rows


def _layer_rows(store: MetricsStore) -> list[tuple]:
    rows = []
    for vehicle in store.receivers():
        profile = layer_profile(store, vehicle)
        for layer in LAYER_ORDER:
            stats = profile.get(layer)
            if stats is None:
                continue
            rows.append(
                (
                    store.scenario_id,
                    vehicle,
                    layer.name,
                    stats.mean_delay_ms,
                    stats.p95_delay_ms,
                    stats.throughput_kbps,
                )
            )
    return rows


def cmd_run(args) -> int:
    cfg = _load_config(args.config, args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    store = _run_one(cfg)

    _write_csv(out / "pdr.csv", ["scenario_id", "vehicle", "tx", "rx", "pdr"], _pdr_rows(store))
    _write_csv(
        out / "layer_metrics.csv",
        ["scenario_id", "vehicle", "layer", "mean_delay_ms", "p95_delay_ms", "throughput_kbps"],
        _layer_rows(store),
    )
    shadowing = "on" if cfg.shadowing_enabled else "off"
    platoon_rows = [
        (store.scenario_id, shadowing, level.name, platoon_length(store, req))
        for level, req in LEVEL_REQUIREMENTS.items()
    ]
    _write_csv(out / "platoon.csv", ["scenario_id", "shadowing", "level", "length"], platoon_rows)

    config_sha = hashlib.sha256(render_scenario(cfg).encode()).hexdigest()
    (out / "manifest.txt").write_text(
        f"scenario_id={store.scenario_id} config_sha256={config_sha} seed={cfg.seed}\n",
        encoding="utf-8",
    )
    print(f"run {store.scenario_id}: wrote pdr.csv, layer_metrics.csv, platoon.csv to {out}")
    return 0


def cmd_sweep_rb(args) -> int:
    rows = []
    for mcs in args.mcs:
        if not 0 <= mcs <= 28:
            print(f"error: invalid mcs {mcs} (must be 0..28)", file=sys.stderr)
            return 2
    for mcs in sorted(set(args.mcs)):
        for size in sorted(set(args.sizes)):
            for interval in sorted(set(args.intervals)):
                rows.append((mcs, size, interval, min_rbs(mcs, size)))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_csv(out / "rb_sweep.csv", ["mcs", "size_bytes", "interval_ms", "min_rbs"], rows)
    print(f"sweep-rb: wrote {len(rows)} rows to {out / 'rb_sweep.csv'}")
    return 0


def cmd_sweep_pdr(args) -> int:
    base = _load_config(args.config, None)
    modes = {"on": [True], "off": [False], "both": [False, True]}[args.shadowing]
    seeds = [base.seed + i for i in range(args.seeds)]

    sweep_tag = f"{render_scenario(base)}seeds={args.seeds}\nshadowing={args.shadowing}\n"
    sweep_id = hashlib.sha256(sweep_tag.encode()).hexdigest()[:12]

    pdr_rows: list[tuple] = []
    lengths: dict[tuple[bool, str], list[int]] = {}
    for enabled in modes:
        for seed in seeds:
            cfg = replace(base, seed=seed, shadowing_enabled=enabled)
            store = _run_one(cfg)
            label = "on" if enabled else "off"
            for vehicle in store.receivers():
                pdr_rows.append(
                    (
                        store.scenario_id,
                        seed,
                        label,
                        vehicle,
                        store.tx_count[vehicle],
                        store.rx_count(vehicle),
                        pdr(store, vehicle),
                    )
                )
            for level, req in LEVEL_REQUIREMENTS.items():
                lengths.setdefault((enabled, level.name), []).append(platoon_length(store, req))

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_csv(
        out / "pdr_sweep.csv",
        ["scenario_id", "seed", "shadowing", "vehicle", "tx", "rx", "pdr"],
        pdr_rows,
    )
    platoon_rows = []
    for enabled in modes:
        label = "on" if enabled else "off"
        for level in LEVEL_REQUIREMENTS:
            values = lengths[(enabled, level.name)]
            platoon_rows.append((sweep_id, label, level.name, sum(values) / len(values)))
    _write_csv(out / "platoon.csv", ["scenario_id", "shadowing", "level", "length"], platoon_rows)
    print(f"sweep-pdr {sweep_id}: {len(pdr_rows)} PDR rows over {len(seeds)} seed(s)")
    return 0


def _int_list(text: str) -> list[int]:
    try:
        values = [int(part) for part in text.split(",") if part.strip() != ""]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated integer list, got {text!r}")
    if not values:
        raise argparse.ArgumentTypeError("list must not be empty")
    return values


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="platoonsim",
        description="LTE-V sidelink mode-4 platooning simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one scenario and write its CSV outputs")
    p_run.add_argument("--config", help="scenario file (key = value); defaults when omitted")
    p_run.add_argument("--seed", type=int, help="override the scenario seed")
    p_run.add_argument("--out", required=True, help="output directory")
    p_run.set_defaults(func=cmd_run)

    p_rb = sub.add_parser("sweep-rb", help="analytic RB requirement sweep (no simulation)")
    p_rb.add_argument("--mcs", type=_int_list, required=True, help="comma-separated MCS levels")
    p_rb.add_argument("--sizes", type=_int_list, required=True, help="packet sizes in bytes")
    p_rb.add_argument("--intervals", type=_int_list, required=True, help="send intervals in ms")
    p_rb.add_argument("--out", required=True)
    p_rb.set_defaults(func=cmd_sweep_rb)

    p_pdr = sub.add_parser("sweep-pdr", help="PDR and platoon length over seeds and shadowing")
    p_pdr.add_argument("--config", help="scenario file; defaults when omitted")
    p_pdr.add_argument("--seeds", type=_positive_int, required=True, help="number of seeds")
    p_pdr.add_argument("--shadowing", choices=["on", "off", "both"], default="both")
    p_pdr.add_argument("--out", required=True)
    p_pdr.set_defaults(func=cmd_sweep_pdr)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SystemExit:
        raise
    except (ConfigError, MobilityError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
