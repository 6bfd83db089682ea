/** Help: a static walkthrough of the volunteer workflow. */

import { el } from "../dom.js";
import type { PageContext } from "../context.js";

const STEPS: Array<[string, string]> = [
  [
    "1. Create a survey",
    "On the Home page, give the flight a short id and a name. Each drone " +
      "flight over a beach section is one survey.",
  ],
  [
    "2. Upload images",
    "Add the flight's JPEG or PNG photos. GPS position, altitude, and " +
      "heading are read from the image metadata automatically; photos " +
      "without GPS still get detections but stay off the map.",
  ],
  [
    "3. Run detection",
    "The detector finds debris candidates, separates them from rocks, and " +
      "assigns each crop one of the material classes. Progress is shown " +
      "per image; results appear as reviewable crops.",
  ],
  [
    "4. Correct labels",
    "Every crop has a drop-down with the class list. Pick the right class " +
      "when the prediction is wrong; the change is saved immediately and " +
      "kept in the audit log.",
  ],
  [
    "5. Group duplicates",
    "Overlapping photos often capture the same object twice. Duplicate " +
      "grouping compares nearby detections and keeps one canonical record " +
      "per object. Review the groups on the Duplicate page and remove the " +
      "redundant records.",
  ],
  [
    "6. Map and plots",
    "The Map page shows every geolocated record colored by class, with " +
      "hotspot clusters outlined. The Plot page charts the class " +
      "distribution and the per-cluster breakdown. The Data page has the " +
      "full table and the CSV export for reports.",
  ],
];

export function renderHelp(ctx: PageContext, view: HTMLElement): void {
  view.appendChild(el(ctx.doc, "h2", {}, "Help"));
  for (const [title, body] of STEPS) {
    view.appendChild(el(ctx.doc, "h3", {}, title));
    view.appendChild(el(ctx.doc, "p", {}, body));
  }
  view.appendChild(el(ctx.doc, "h3", {}, "Troubleshooting"));
  view.appendChild(
    el(
      ctx.doc,
      "p",
      {},
      "Errors show up as dismissible notices in the corner, usually with a " +
        "Retry button. Nothing is stored in the browser: refreshing always " +
        "reloads the current state from the survey service.",
    ),
  );
}
