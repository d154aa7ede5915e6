/**
 * Minimal hand-rolled SVG charts: multi-series line plots and grouped bars.
 * Output is deterministic (no timestamps, no randomness), so reruns are
 * byte-identical.
 */

export interface Point {
  x: number;
  y: number;
}

export interface LineSeries {
  label: string;
  points: Point[];
  color: string;
  /** stroke-dasharray, e.g. "6 4"; solid when absent */
  dash?: string;
}

export interface LineChartOptions {
  title: string;
  xLabel: string;
  yLabel: string;
  series: LineSeries[];
  width?: number;
  height?: number;
  yMin?: number;
  yMax?: number;
}

export interface BarGroup {
  label: string;
  color: string;
  /** one value per category, NaN for "absent" */
  values: number[];
}

export interface BarChartOptions {
  title: string;
  yLabel: string;
  categories: string[];
  groups: BarGroup[];
  width?: number;
  height?: number;
}

export const PALETTE = [
  "#1f77b4",
  "#d62728",
  "#2ca02c",
  "#9467bd",
  "#ff7f0e",
  "#8c564b",
  "#17becf",
  "#7f7f7f",
  "#bcbd22",
  "#e377c2",
];

const MARGIN = { top: 44, right: 160, bottom: 56, left: 72 };

function esc(text: string): string {
  return text.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

function fmt(value: number): string {
  const rounded = Number(value.toPrecision(6));
  return Object.is(rounded, -0) ? "0" : String(rounded);
}

/** Round tick steps to 1/2/5 times a power of ten. */
function niceTicks(lo: number, hi: number, target = 6): number[] {
  if (!(hi > lo)) {
    hi = lo + 1;
  }
  const rawStep = (hi - lo) / target;
  const power = Math.pow(10, Math.floor(Math.log10(rawStep)));
  let step = power;
  for (const mult of [1, 2, 5, 10]) {
    if (mult * power >= rawStep) {
      step = mult * power;
      break;
    }
  }
  const ticks: number[] = [];
  for (let v = Math.ceil(lo / step) * step; v <= hi + step * 1e-9; v += step) {
    ticks.push(Number(v.toPrecision(12)));
  }
  return ticks;
}

interface Scale {
  (value: number): number;
}

function linearScale(d0: number, d1: number, r0: number, r1: number): Scale {
  const span = d1 - d0 || 1;
  return (v: number) => r0 + ((v - d0) / span) * (r1 - r0);
}

function frame(
  width: number,
  height: number,
  title: string,
  body: string[],
): string {
  return [
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" viewBox="0 0 ${width} ${height}" font-family="Helvetica, Arial, sans-serif">`,
    `<rect width="${width}" height="${height}" fill="white"/>`,
    `<text x="${width / 2}" y="24" text-anchor="middle" font-size="16" font-weight="bold">${esc(title)}</text>`,
    ...body,
    "</svg>",
  ].join("\n");
}

function axes(
  width: number,
  height: number,
  xLabel: string,
  yLabel: string,
): string[] {
  const x0 = MARGIN.left;
  const x1 = width - MARGIN.right;
  const y0 = height - MARGIN.bottom;
  const y1 = MARGIN.top;
  return [
    `<line x1="${x0}" y1="${y0}" x2="${x1}" y2="${y0}" stroke="black"/>`,
    `<line x1="${x0}" y1="${y0}" x2="${x0}" y2="${y1}" stroke="black"/>`,
    `<text x="${(x0 + x1) / 2}" y="${height - 12}" text-anchor="middle" font-size="13">${esc(xLabel)}</text>`,
    `<text x="18" y="${(y0 + y1) / 2}" text-anchor="middle" font-size="13" transform="rotate(-90 18 ${(y0 + y1) / 2})">${esc(yLabel)}</text>`,
  ];
}

function legend(entries: { label: string; color: string; dash?: string }[], width: number): string[] {
  const x = width - MARGIN.right + 12;
  const out: string[] = [];
  entries.forEach((entry, i) => {
    const y = MARGIN.top + 10 + i * 20;
    out.push(
      `<line x1="${x}" y1="${y}" x2="${x + 26}" y2="${y}" stroke="${entry.color}" stroke-width="2"${
        entry.dash ? ` stroke-dasharray="${entry.dash}"` : ""
      }/>`,
      `<text x="${x + 32}" y="${y + 4}" font-size="12">${esc(entry.label)}</text>`,
    );
  });
  return out;
}

export function lineChart(opts: LineChartOptions): string {
  const width = opts.width ?? 720;
  const height = opts.height ?? 480;
  const xs = opts.series.flatMap((s) => s.points.map((p) => p.x));
  const ys = opts.series.flatMap((s) => s.points.map((p) => p.y));
  const xLo = Math.min(...xs);
  const xHi = Math.max(...xs);
  const yLo = opts.yMin ?? Math.min(0, ...ys);
  const yHi = opts.yMax ?? Math.max(...ys);

  const sx = linearScale(xLo, xHi, MARGIN.left, width - MARGIN.right);
  const sy = linearScale(yLo, yHi, height - MARGIN.bottom, MARGIN.top);

  const body = axes(width, height, opts.xLabel, opts.yLabel);
  for (const tick of niceTicks(xLo, xHi)) {
    if (tick < xLo - 1e-9 || tick > xHi + 1e-9) continue;
    const px = sx(tick);
    body.push(
      `<line x1="${fmt(px)}" y1="${height - MARGIN.bottom}" x2="${fmt(px)}" y2="${height - MARGIN.bottom + 5}" stroke="black"/>`,
      `<text x="${fmt(px)}" y="${height - MARGIN.bottom + 18}" text-anchor="middle" font-size="11">${fmt(tick)}</text>`,
    );
  }
  for (const tick of niceTicks(yLo, yHi)) {
    if (tick < yLo - 1e-9 || tick > yHi + 1e-9) continue;
    const py = sy(tick);
    body.push(
      `<line x1="${MARGIN.left - 5}" y1="${fmt(py)}" x2="${MARGIN.left}" y2="${fmt(py)}" stroke="black"/>`,
      `<line x1="${MARGIN.left}" y1="${fmt(py)}" x2="${width - MARGIN.right}" y2="${fmt(py)}" stroke="#dddddd"/>`,
      `<text x="${MARGIN.left - 9}" y="${fmt(py + 4)}" text-anchor="end" font-size="11">${fmt(tick)}</text>`,
    );
  }

  for (const series of opts.series) {
    const sorted = [...series.points].sort((a, b) => a.x - b.x);
    const path = sorted
      .map((p, i) => `${i === 0 ? "M" : "L"}${fmt(sx(p.x))} ${fmt(sy(p.y))}`)
      .join(" ");
    body.push(
      `<path d="${path}" fill="none" stroke="${series.color}" stroke-width="2"${
        series.dash ? ` stroke-dasharray="${series.dash}"` : ""
      } data-series="${esc(series.label)}"/>`,
    );
    for (const p of sorted) {
      body.push(`<circle cx="${fmt(sx(p.x))}" cy="${fmt(sy(p.y))}" r="3" fill="${series.color}"/>`);
    }
  }
  body.push(...legend(opts.series, width));
  return frame(width, height, opts.title, body);
}

export function groupedBarChart(opts: BarChartOptions): string {
  const width = opts.width ?? 720;
  const height = opts.height ?? 480;
  const values = opts.groups.flatMap((g) => g.values).filter((v) => Number.isFinite(v));
  const yHi = Math.max(...values, 0);
  const sy = linearScale(0, yHi, height - MARGIN.bottom, MARGIN.top);

  const plotWidth = width - MARGIN.left - MARGIN.right;
  const slot = plotWidth / opts.categories.length;
  const barWidth = (slot * 0.8) / opts.groups.length;

  const body = axes(width, height, "", opts.yLabel);
  for (const tick of niceTicks(0, yHi)) {
    if (tick > yHi + 1e-9) continue;
    const py = sy(tick);
    body.push(
      `<line x1="${MARGIN.left - 5}" y1="${fmt(py)}" x2="${MARGIN.left}" y2="${fmt(py)}" stroke="black"/>`,
      `<line x1="${MARGIN.left}" y1="${fmt(py)}" x2="${width - MARGIN.right}" y2="${fmt(py)}" stroke="#dddddd"/>`,
      `<text x="${MARGIN.left - 9}" y="${fmt(py + 4)}" text-anchor="end" font-size="11">${fmt(tick)}</text>`,
    );
  }
  opts.categories.forEach((category, ci) => {
    const center = MARGIN.left + slot * (ci + 0.5);
    body.push(
      `<text x="${fmt(center)}" y="${height - MARGIN.bottom + 18}" text-anchor="middle" font-size="12">${esc(category)}</text>`,
    );
    opts.groups.forEach((group, gi) => {
      const value = group.values[ci];
      if (!Number.isFinite(value)) return;
      const x = center - (opts.groups.length * barWidth) / 2 + gi * barWidth;
      const y = sy(value);
      const h = height - MARGIN.bottom - y;
      body.push(
        `<rect x="${fmt(x)}" y="${fmt(y)}" width="${fmt(barWidth)}" height="${fmt(Math.max(h, 0))}" fill="${group.color}" data-group="${esc(group.label)}" data-category="${esc(category)}"/>`,
      );
    });
  });
  body.push(...legend(opts.groups, width));
  return frame(width, height, opts.title, body);
}
