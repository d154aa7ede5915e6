/**
 * The three figure kinds rendered from the simulator's CSV outputs. Each
 * renderer reads one CSV, writes SVG + PNG image pairs into the output
 * directory, and returns the written paths. Inputs are never modified.
 */

import * as fs from "fs";
import * as path from "path";

import {
  LAYER_METRICS_COLUMNS,
  PDR_SWEEP_COLUMNS,
  RB_SWEEP_COLUMNS,
  Row,
  SchemaError,
  parseCsv,
} from "./csv";
import { svgToPng } from "./png";
import { BarGroup, LineSeries, PALETTE, groupedBarChart, lineChart } from "./svg";

export const LAYER_ORDER = ["APP", "TRANSPORT", "NETWORK", "PDCP", "RLC", "MAC"];

export const SHADOW_DASH = "7 4";

function writeImagePair(outDir: string, stem: string, svg: string): string[] {
  fs.mkdirSync(outDir, { recursive: true });
  const svgPath = path.join(outDir, `${stem}.svg`);
  const pngPath = path.join(outDir, `${stem}.png`);
  fs.writeFileSync(svgPath, svg);
  fs.writeFileSync(pngPath, svgToPng(svg));
  return [svgPath, pngPath];
}

function uniqueSorted(values: number[]): number[] {
  return [...new Set(values)].sort((a, b) => a - b);
}

/** One image per sending interval: required RBs vs packet size, one series per MCS. */
export function plotRbCurves(csvText: string, outDir: string): string[] {
  const rows = parseCsv(csvText, RB_SWEEP_COLUMNS);
  const written: string[] = [];
  for (const interval of uniqueSorted(rows.map((r) => r.interval_ms as number))) {
    const subset = rows.filter((r) => r.interval_ms === interval);
    const series: LineSeries[] = uniqueSorted(subset.map((r) => r.mcs as number)).map(
      (mcs, i) => ({
        label: `MCS ${mcs}`,
        color: PALETTE[i % PALETTE.length],
        points: subset
          .filter((r) => r.mcs === mcs)
          .map((r) => ({ x: r.size_bytes as number, y: r.min_rbs as number })),
      }),
    );
    const svg = lineChart({
      title: `Required resource blocks vs packet size (interval ${interval} ms)`,
      xLabel: "packet size (bytes)",
      yLabel: "resource blocks",
      series,
    });
    written.push(...writeImagePair(outDir, `rb_curves_interval_${interval}ms`, svg));
  }
  return written;
}

/** PDR vs platoon position; shadowing runs dashed, non-shadowing solid. */
export function plotPdrCurves(csvText: string, outDir: string): string[] {
  const rows = parseCsv(csvText, PDR_SWEEP_COLUMNS);
  const modes = [...new Set(rows.map((r) => r.shadowing as string))].sort();
  for (const mode of modes) {
    if (mode !== "on" && mode !== "off") {
      throw new SchemaError(`unknown shadowing mode "${mode}" (expected on/off)`);
    }
  }
  const series: LineSeries[] = [];
  modes.forEach((mode, i) => {
    const subset = rows.filter((r) => r.shadowing === mode);
    const points = uniqueSorted(subset.map((r) => r.vehicle as number)).map((vehicle) => {
      const values = subset
        .filter((r) => r.vehicle === vehicle)
        .map((r) => r.pdr as number);
      return { x: vehicle, y: values.reduce((a, b) => a + b, 0) / values.length };
    });
    series.push({
      label: mode === "on" ? "shadowing (dashed)" : "no shadowing",
      color: PALETTE[i % PALETTE.length],
      dash: mode === "on" ? SHADOW_DASH : undefined,
      points,
    });
  });
  const svg = lineChart({
    title: "Packet delivery ratio per platoon position",
    xLabel: "vehicle",
    yLabel: "PDR",
    series,
    yMin: 0,
    yMax: 1.02,
  });
  return writeImagePair(outDir, "pdr_vehicles", svg);
}

/** Grouped bars per layer in stack order: throughput and mean delay, per vehicle. */
export function plotLayerProfiles(csvText: string, outDir: string): string[] {
  const rows = parseCsv(csvText, LAYER_METRICS_COLUMNS);
  for (const row of rows) {
    if (!LAYER_ORDER.includes(row.layer as string)) {
      throw new SchemaError(`unknown layer name "${row.layer}"`);
    }
  }
  const vehicles = uniqueSorted(rows.map((r) => r.vehicle as number));

  const groups = (metric: "throughput_kbps" | "mean_delay_ms"): BarGroup[] =>
    vehicles.map((vehicle, i) => ({
      label: `V${vehicle}`,
      color: PALETTE[i % PALETTE.length],
      values: LAYER_ORDER.map((layer) => {
        const row = rows.find((r) => r.vehicle === vehicle && r.layer === layer);
        return row ? (row[metric] as number) : NaN;
      }),
    }));

  const written = writeImagePair(
    outDir,
    "layer_throughput",
    groupedBarChart({
      title: "Throughput at each layer",
      yLabel: "throughput (kbps)",
      categories: LAYER_ORDER,
      groups: groups("throughput_kbps"),
    }),
  );
  written.push(
    ...writeImagePair(
      outDir,
      "layer_delay",
      groupedBarChart({
        title: "Mean delay at each layer",
        yLabel: "delay (ms)",
        categories: LAYER_ORDER,
        groups: groups("mean_delay_ms"),
      }),
    ),
  );
  return written;
}

export type PlotKind = "rb" | "pdr" | "layers";

export const RENDERERS: Record<PlotKind, (csv: string, outDir: string) => string[]> = {
  rb: plotRbCurves,
  pdr: plotPdrCurves,
  layers: plotLayerProfiles,
};
