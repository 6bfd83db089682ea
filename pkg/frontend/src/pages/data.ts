/** Data: the paginated record table with label correction, row deletion,
 * and CSV download. */

import { el } from "../dom.js";
import { labelDropdown, surveyPicker } from "./common.js";
import type { PageContext } from "../context.js";
import type { CorrectionBinding } from "./common.js";
import type { DebrisRecord } from "../types.js";

const PAGE_SIZE = 25;

function formatCoord(value: number | null): string {
  return value === null ? "–" : value.toFixed(6);
}

function recordRow(
  ctx: PageContext,
  record: DebrisRecord,
  binding: CorrectionBinding,
): HTMLTableRowElement {
  const row = el(ctx.doc, "tr");
  row.appendChild(
    el(
      ctx.doc,
      "td",
      {},
      el(ctx.doc, "img", {
        class: "thumb",
        src: ctx.api.url(record.crop_url),
        alt: record.record_id,
      }),
    ),
  );
  row.appendChild(el(ctx.doc, "td", { class: "mono" }, record.record_id));
  row.appendChild(el(ctx.doc, "td", {}, labelDropdown(ctx, record, binding)));
  row.appendChild(el(ctx.doc, "td", {}, record.corrected_label === null ? "" : "corrected"));
  row.appendChild(el(ctx.doc, "td", {}, record.score.toFixed(3)));
  row.appendChild(
    el(ctx.doc, "td", {}, `${formatCoord(record.latitude)}, ${formatCoord(record.longitude)}`),
  );
  row.appendChild(el(ctx.doc, "td", {}, record.is_canonical ? "yes" : "duplicate"));

  const remove = el(ctx.doc, "button", { class: "danger" }, "Delete");
  remove.addEventListener("click", () => {
    ctx.api
      .deleteRecord(record.record_id)
      .then(() => {
        ctx.toasts.info(`deleted ${record.record_id}`);
        ctx.refresh();
      })
      .catch((cause) =>
        ctx.toasts.error(`delete failed: ${String(cause)}`, { retry: () => remove.click() }),
      );
  });
  row.appendChild(el(ctx.doc, "td", {}, remove));
  return row;
}

export async function renderData(ctx: PageContext, view: HTMLElement): Promise<void> {
  view.append(el(ctx.doc, "h2", {}, "Data"), await surveyPicker(ctx));
  const surveyId = ctx.route.survey;
  if (!surveyId) {
    return;
  }
  const pageNum = Math.max(1, Number(ctx.route.params["page"] ?? "1") || 1);
  let page;
  try {
    page = await ctx.api.records(surveyId, pageNum, PAGE_SIZE);
  } catch (cause) {
    ctx.toasts.error(`could not load records: ${String(cause)}`, { retry: ctx.refresh });
    return;
  }

  const download = el(
    ctx.doc,
    "a",
    { href: ctx.api.exportCsvUrl(surveyId), download: `${surveyId}.csv` },
    "Download CSV",
  );
  view.appendChild(el(ctx.doc, "div", { class: "panel" }, download));

  const table = el(ctx.doc, "table", { class: "records" });
  const head = el(ctx.doc, "tr");
  for (const title of ["Crop", "Record", "Label", "", "Score", "Position", "Canonical", ""]) {
    head.appendChild(el(ctx.doc, "th", {}, title));
  }
  table.appendChild(head);
  const body = el(ctx.doc, "tbody");
  table.appendChild(body);

  const binding: CorrectionBinding = {
    records: page.records,
    rerender(records) {
      binding.records = records;
      paint(records);
    },
  };
  const paint = (records: DebrisRecord[]) => {
    body.replaceChildren();
    for (const record of records) {
      body.appendChild(recordRow(ctx, record, binding));
    }
  };
  paint(page.records);
  view.appendChild(table);

  const lastPage = Math.max(1, Math.ceil(page.total / PAGE_SIZE));
  const pager = el(ctx.doc, "div", { class: "pager" });
  const go = (target: number) =>
    ctx.navigate({ ...ctx.route, params: { ...ctx.route.params, page: String(target) } });
  const prev = el(ctx.doc, "button", {}, "← prev");
  prev.disabled = pageNum <= 1;
  prev.addEventListener("click", () => go(pageNum - 1));
  const next = el(ctx.doc, "button", {}, "next →");
  next.disabled = pageNum >= lastPage;
  next.addEventListener("click", () => go(pageNum + 1));
  pager.append(prev, ` page ${pageNum} of ${lastPage} (${page.total} records) `, next);
  view.appendChild(pager);
}
