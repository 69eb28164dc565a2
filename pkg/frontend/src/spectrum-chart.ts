/**
 * Log-scale radial spectrum overlay: up to three curves (original,
 * degraded, reference) over normalized frequency radius, with vertical
 * guides at the radial band boundaries.
 *
 * Geometry computation is separated from canvas drawing so the mapping
 * math is unit-testable without a rendering context.
 */

import type { SpectrumPayload } from "./types.js";

export interface ChartSeries {
  label: string;
  color: string;
  payload: SpectrumPayload;
}

export interface Polyline {
  label: string;
  color: string;
  /** pixel-space vertices, one per spectrum bin */
  points: Array<[number, number]>;
}

export interface ChartGeometry {
  width: number;
  height: number;
  padding: number;
  logMin: number;
  logMax: number;
  polylines: Polyline[];
  /** x pixel positions of the band boundary guides */
  bandGuides: number[];
  xLabel: string;
  yLabel: string;
}

export const BAND_BOUNDARIES = [1 / 3, 2 / 3] as const;
const PADDING = 36;

/** Power values clamped away from zero so the log axis stays finite;
 * empty bins sit 12 decades below the global peak. */
function safeLog10(power: number, floor: number): number {
  return Math.log10(Math.max(power, floor));
}

export function buildChartGeometry(
  series: ChartSeries[],
  width: number,
  height: number,
  bandBoundaries: readonly number[] = BAND_BOUNDARIES,
): ChartGeometry {
  const peak = Math.max(1e-300, ...series.flatMap((s) => s.payload.power));
  const floor = peak * 1e-12;

  let logMin = Number.POSITIVE_INFINITY;
  let logMax = Number.NEGATIVE_INFINITY;
  for (const s of series) {
    for (const p of s.payload.power) {
      const v = safeLog10(p, floor);
      logMin = Math.min(logMin, v);
      logMax = Math.max(logMax, v);
    }
  }
  if (!Number.isFinite(logMin) || !Number.isFinite(logMax)) {
    logMin = 0;
    logMax = 1;
  }
  if (logMax - logMin < 1e-9) logMax = logMin + 1;

  const innerW = width - 2 * PADDING;
  const innerH = height - 2 * PADDING;
  const xPixel = (radius: number) => PADDING + radius * innerW;
  const yPixel = (logPower: number) => PADDING + (logMax - logPower) / (logMax - logMin) * innerH;

  const polylines = series.map((s) => ({
    label: s.label,
    color: s.color,
    points: s.payload.bin_centers.map(
      (center, i): [number, number] => [xPixel(center), yPixel(safeLog10(s.payload.power[i] ?? 0, floor))],
    ),
  }));

  return {
    width,
    height,
    padding: PADDING,
    logMin,
    logMax,
    polylines,
    bandGuides: bandBoundaries.map(xPixel),
    xLabel: "normalized radius",
    yLabel: "log10 power",
  };
}

export class SpectrumChart {
  private readonly canvas: HTMLCanvasElement;
  private readonly ctx: CanvasRenderingContext2D;

  constructor(canvas: HTMLCanvasElement) {
    this.canvas = canvas;
    const ctx = canvas.getContext("2d");
    if (!ctx) throw new Error("2D canvas context unavailable");
    this.ctx = ctx;
  }

  draw(series: ChartSeries[]): void {
    const { width, height } = this.canvas;
    const ctx = this.ctx;
    ctx.clearRect(0, 0, width, height);
    ctx.fillStyle = "#111418";
    ctx.fillRect(0, 0, width, height);
    if (series.length === 0) return;

    const geom = buildChartGeometry(series, width, height);

    ctx.strokeStyle = "#333";
    ctx.strokeRect(geom.padding, geom.padding, width - 2 * geom.padding, height - 2 * geom.padding);

    ctx.strokeStyle = "#555";
    ctx.setLineDash([4, 4]);
    for (const x of geom.bandGuides) {
      ctx.beginPath();
      ctx.moveTo(x, geom.padding);
      ctx.lineTo(x, height - geom.padding);
      ctx.stroke();
    }
    ctx.setLineDash([]);

    for (const line of geom.polylines) {
      ctx.strokeStyle = line.color;
      ctx.lineWidth = 1.5;
      ctx.beginPath();
      line.points.forEach(([x, y], i) => (i === 0 ? ctx.moveTo(x, y) : ctx.lineTo(x, y)));
      ctx.stroke();
    }

    ctx.fillStyle = "#aaa";
    ctx.font = "11px sans-serif";
    ctx.fillText(geom.xLabel, width / 2 - 40, height - 8);
    let legendY = geom.padding + 14;
    for (const line of geom.polylines) {
      ctx.fillStyle = line.color;
      ctx.fillText(line.label, geom.padding + 8, legendY);
      legendY += 14;
    }
  }
}
