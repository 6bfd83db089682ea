/** Duplicate: review grouped re-sightings and remove the redundant records.
 * Removal is two-step (confirm or undo) and keeps the canonical member. */

import { el } from "../dom.js";
import { surveyPicker } from "./common.js";
import type { PageContext } from "../context.js";
import type { DuplicateGroup } from "../types.js";

function groupCard(ctx: PageContext, group: DuplicateGroup): HTMLElement {
  const card = el(ctx.doc, "div", { class: "dup-card" });
  card.appendChild(el(ctx.doc, "h3", {}, `Group ${group.group_id}`));

  const gallery = el(ctx.doc, "div", { class: "dup-gallery" });
  for (const member of group.members) {
    const cell = el(ctx.doc, "figure", { class: member === group.canonical ? "canonical" : "" });
    const thumb = group.thumbnails[member];
    if (thumb) {
      cell.appendChild(el(ctx.doc, "img", { src: ctx.api.url(thumb), alt: member }));
    }
    cell.appendChild(
      el(
        ctx.doc,
        "figcaption",
        { class: "mono" },
        member === group.canonical ? `★ ${member}` : member,
      ),
    );
    gallery.appendChild(cell);
  }
  card.appendChild(gallery);

  const edges = group.edges
    .map((edge) => `${edge.a} ↔ ${edge.b}: ${edge.match_count} matches`)
    .join("; ");
  card.appendChild(el(ctx.doc, "p", { class: "muted" }, edges));

  const extras = group.members.filter((member) => member !== group.canonical);
  const actions = el(ctx.doc, "div", { class: "dup-actions" });
  const removeButton = el(ctx.doc, "button", { class: "danger" }, `Remove ${extras.length} duplicate(s)`);
  removeButton.addEventListener("click", () => {
    // Swap in a confirm/undo pair; nothing is deleted until confirmed.
    const confirmButton = el(ctx.doc, "button", { class: "danger" }, "Confirm removal");
    const undoButton = el(ctx.doc, "button", {}, "Undo");
    undoButton.addEventListener("click", () => actions.replaceChildren(removeButton));
    confirmButton.addEventListener("click", async () => {
      try {
        for (const recordId of extras) {
          await ctx.api.deleteRecord(recordId);
        }
        ctx.toasts.info(`removed ${extras.length} duplicate record(s), kept ${group.canonical}`);
        ctx.refresh();
      } catch (cause) {
        ctx.toasts.error(`removal failed: ${String(cause)}`, { retry: ctx.refresh });
      }
    });
    actions.replaceChildren(confirmButton, " ", undoButton);
  });
  actions.appendChild(removeButton);
  card.appendChild(actions);
  return card;
}

export async function renderDuplicate(ctx: PageContext, view: HTMLElement): Promise<void> {
  view.append(el(ctx.doc, "h2", {}, "Duplicate review"), await surveyPicker(ctx));
  const surveyId = ctx.route.survey;
  if (!surveyId) {
    return;
  }
  try {
    const groups = await ctx.api.duplicates(surveyId);
    if (groups.length === 0) {
      view.appendChild(
        el(ctx.doc, "p", { class: "muted" }, "No duplicate groups. Run duplicate grouping on the Home page."),
      );
      return;
    }
    for (const group of groups) {
      view.appendChild(groupCard(ctx, group));
    }
  } catch (cause) {
    ctx.toasts.error(`could not load duplicates: ${String(cause)}`, { retry: ctx.refresh });
  }
}
