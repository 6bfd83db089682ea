/** Class legend derived from the label schema the API serves. The UI never
 * hardcodes a label list; every legend, dropdown, and color lookup starts
 * from a fetched schema document. */

import type { LabelSchema } from "./types.js";

export interface LegendEntry {
  label: string;
  color: string;
}

// Used only for labels the server did not assign a color to.
const FALLBACK_COLORS = [
  "#8c564b",
  "#e377c2",
  "#7f7f7f",
  "#bcbd22",
  "#17becf",
  "#aec7e8",
  "#ffbb78",
];

export function colorFor(schema: LabelSchema, label: string): string {
  const configured = schema.colors[label];
  if (configured) {
    return configured;
  }
  const index = schema.labels.indexOf(label);
  const position = index >= 0 ? index : schema.labels.length;
  return FALLBACK_COLORS[position % FALLBACK_COLORS.length] ?? "#7f7f7f";
}

/** One entry per schema class, in schema order. */
export function legendEntries(schema: LabelSchema): LegendEntry[] {
  return schema.labels.map((label) => ({ label, color: colorFor(schema, label) }));
}

export function renderLegend(doc: Document, schema: LabelSchema): HTMLElement {
  const list = doc.createElement("ul");
  list.className = "legend";
  for (const entry of legendEntries(schema)) {
    const item = doc.createElement("li");
    const swatch = doc.createElement("span");
    swatch.className = "swatch";
    swatch.style.backgroundColor = entry.color;
    const name = doc.createElement("span");
    name.textContent = entry.label;
    item.append(swatch, name);
    list.appendChild(item);
  }
  return list;
}
