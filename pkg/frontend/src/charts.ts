/** Chart models and canvas painters for the Plot page. The models are plain
 * data so the numbers shown can be checked against the stats endpoint
 * without a browser. */

import { colorFor } from "./legend.js";
import type { LabelSchema, SurveyStats } from "./types.js";

export interface Bar {
  label: string;
  value: number;
  color: string;
}

export interface PieSlice extends Bar {
  startAngle: number;
  endAngle: number;
}

/** One bar per schema class, in schema order, zero-filled for classes the
 * survey never saw. Counts come straight from the stats document. */
export function classBars(stats: SurveyStats, schema: LabelSchema): Bar[] {
  const bars = schema.labels.map((label) => ({
    label,
    value: stats.classes[label] ?? 0,
    color: colorFor(schema, label),
  }));
  for (const label of Object.keys(stats.classes).sort()) {
    if (!schema.labels.includes(label)) {
      bars.push({ label, value: stats.classes[label] ?? 0, color: colorFor(schema, label) });
    }
  }
  return bars;
}

export function pieSlices(bars: Bar[]): PieSlice[] {
  const total = bars.reduce((sum, bar) => sum + bar.value, 0);
  if (total <= 0) {
    return [];
  }
  const slices: PieSlice[] = [];
  let angle = -Math.PI / 2;
  for (const bar of bars) {
    if (bar.value === 0) {
      continue;
    }
    const sweep = (bar.value / total) * 2 * Math.PI;
    slices.push({ ...bar, startAngle: angle, endAngle: angle + sweep });
    angle += sweep;
  }
  return slices;
}

export function drawBars(canvas: HTMLCanvasElement, bars: Bar[]): void {
  const ctx = canvas.getContext("2d");
  if (!ctx) {
    return;
  }
  const { width, height } = canvas;
  ctx.clearRect(0, 0, width, height);
  const peak = Math.max(1, ...bars.map((bar) => bar.value));
  const margin = 30;
  const plotHeight = height - 2 * margin;
  const slot = (width - 2 * margin) / Math.max(1, bars.length);
  ctx.font = "12px sans-serif";
  ctx.textAlign = "center";
  bars.forEach((bar, i) => {
    const barHeight = (bar.value / peak) * plotHeight;
    const x = margin + i * slot + slot * 0.15;
    const y = height - margin - barHeight;
    ctx.fillStyle = bar.color;
    ctx.fillRect(x, y, slot * 0.7, barHeight);
    ctx.fillStyle = "#333";
    ctx.fillText(String(bar.value), x + slot * 0.35, y - 4);
    ctx.fillText(bar.label, x + slot * 0.35, height - margin + 14);
  });
}

export function drawPie(canvas: HTMLCanvasElement, slices: PieSlice[]): void {
  const ctx = canvas.getContext("2d");
  if (!ctx) {
    return;
  }
  const { width, height } = canvas;
  ctx.clearRect(0, 0, width, height);
  const cx = width / 2;
  const cy = height / 2;
  const radius = Math.min(width, height) / 2 - 10;
  for (const slice of slices) {
    ctx.beginPath();
    ctx.moveTo(cx, cy);
    ctx.arc(cx, cy, radius, slice.startAngle, slice.endAngle);
    ctx.closePath();
    ctx.fillStyle = slice.color;
    ctx.fill();
    ctx.strokeStyle = "#fff";
    ctx.stroke();
  }
}
