/** Map: the geolocated debris scatter with per-class colors, cluster
 * outlines, and the class legend. A tile server is optional; without one
 * the scatter renders on a blank background. */

import { el } from "../dom.js";
import { renderLegend } from "../legend.js";
import { renderMap } from "../mapview.js";
import { surveyPicker } from "./common.js";
import type { PageContext } from "../context.js";

const TILE_KEY = "shoresweep.tileTemplate";

export async function renderMapPage(ctx: PageContext, view: HTMLElement): Promise<void> {
  view.append(el(ctx.doc, "h2", {}, "Debris map"), await surveyPicker(ctx));
  const surveyId = ctx.route.survey;
  if (!surveyId) {
    return;
  }

  let stored = "";
  try {
    stored = ctx.doc.defaultView?.localStorage.getItem(TILE_KEY) ?? "";
  } catch {
    // storage blocked; offline rendering still works
  }
  const tileInput = el(ctx.doc, "input", {
    size: "50",
    placeholder: "tile server template, e.g. https://tile.example.org/{z}/{x}/{y}.png",
    value: stored,
  });
  tileInput.value = stored;
  const applyButton = el(ctx.doc, "button", {}, "Apply");
  view.appendChild(
    el(ctx.doc, "div", { class: "panel" }, "Tiles (blank for offline): ", tileInput, " ", applyButton),
  );

  const canvas = el(ctx.doc, "canvas", { width: "900", height: "560", class: "map-canvas" });
  const note = el(ctx.doc, "p", { class: "muted" });
  view.append(canvas, note, renderLegend(ctx.doc, ctx.schema));

  const paint = async () => {
    try {
      const mapDoc = await ctx.api.mapDocument(surveyId);
      renderMap(canvas, mapDoc, tileInput.value);
      note.textContent =
        `${mapDoc.features.length} mapped record(s)` +
        (mapDoc.properties.unmapped_records
          ? `, ${mapDoc.properties.unmapped_records} without GPS`
          : "");
    } catch (cause) {
      ctx.toasts.error(`could not load the map: ${String(cause)}`, { retry: paint });
    }
  };
  applyButton.addEventListener("click", () => {
    try {
      ctx.doc.defaultView?.localStorage.setItem(TILE_KEY, tileInput.value);
    } catch {
      // not persisted, still applied for this view
    }
    void paint();
  });
  await paint();
}
