/** Plot: class distribution as bar and pie charts, plus a per-cluster
 * breakdown table. All counts come from the stats endpoint. */

import { classBars, drawBars, drawPie, pieSlices } from "../charts.js";
import { el } from "../dom.js";
import { surveyPicker } from "./common.js";
import type { PageContext } from "../context.js";

export async function renderPlot(ctx: PageContext, view: HTMLElement): Promise<void> {
  view.append(el(ctx.doc, "h2", {}, "Distribution"), await surveyPicker(ctx));
  const surveyId = ctx.route.survey;
  if (!surveyId) {
    return;
  }
  let stats;
  try {
    stats = await ctx.api.stats(surveyId);
  } catch (cause) {
    ctx.toasts.error(`could not load stats: ${String(cause)}`, { retry: ctx.refresh });
    return;
  }

  view.appendChild(
    el(
      ctx.doc,
      "p",
      { class: "muted" },
      `${stats.total_records} record(s), ${stats.canonical_records} canonical, ` +
        `${stats.duplicate_groups} duplicate group(s), ${stats.unmapped_records} unmapped`,
    ),
  );

  const bars = classBars(stats, ctx.schema);
  const barCanvas = el(ctx.doc, "canvas", { width: "640", height: "320" });
  const pieCanvas = el(ctx.doc, "canvas", { width: "320", height: "320" });
  drawBars(barCanvas, bars);
  drawPie(pieCanvas, pieSlices(bars));
  view.appendChild(el(ctx.doc, "div", { class: "charts" }, barCanvas, pieCanvas));

  view.appendChild(el(ctx.doc, "h3", {}, "Hotspot clusters"));
  if (stats.clusters.length === 0) {
    view.appendChild(el(ctx.doc, "p", { class: "muted" }, "No clusters (run detection first)."));
    return;
  }
  const table = el(ctx.doc, "table", { class: "records" });
  const head = el(ctx.doc, "tr");
  for (const title of ["Cluster", "Size", "Center", "Classes"]) {
    head.appendChild(el(ctx.doc, "th", {}, title));
  }
  table.appendChild(head);
  for (const cluster of stats.clusters) {
    const row = el(ctx.doc, "tr");
    row.appendChild(el(ctx.doc, "td", {}, String(cluster.cluster_id)));
    row.appendChild(el(ctx.doc, "td", {}, String(cluster.size)));
    const [lat, lon] = cluster.center;
    row.appendChild(el(ctx.doc, "td", { class: "mono" }, `${lat.toFixed(6)}, ${lon.toFixed(6)}`));
    const breakdown = Object.entries(cluster.labels)
      .sort((a, b) => b[1] - a[1])
      .map(([label, count]) => `${label}: ${count}`)
      .join(", ");
    row.appendChild(el(ctx.doc, "td", {}, breakdown));
    table.appendChild(row);
  }
  view.appendChild(table);
}
