/** Fragments shared by several pages: the survey picker and the label
 * correction dropdown. */

import { correctOptimistically } from "../corrections.js";
import { el } from "../dom.js";
import type { PageContext } from "../context.js";
import type { DebrisRecord } from "../types.js";

export async function surveyPicker(ctx: PageContext): Promise<HTMLElement> {
  const wrapper = el(ctx.doc, "div", { class: "survey-picker" });
  wrapper.append("Survey: ");
  const select = el(ctx.doc, "select");
  try {
    const surveys = await ctx.api.surveys();
    if (surveys.length === 0) {
      wrapper.append(el(ctx.doc, "em", {}, "none yet; create one on the Home page"));
      return wrapper;
    }
    for (const survey of surveys) {
      const option = el(
        ctx.doc,
        "option",
        { value: survey.survey_id },
        `${survey.name} (${survey.images} images, ${survey.records} records)`,
      );
      if (survey.survey_id === ctx.route.survey) {
        option.selected = true;
      }
      select.appendChild(option);
    }
    if (ctx.route.survey === null && surveys.length > 0) {
      // Land on the first survey rather than an empty page.
      ctx.navigate({ ...ctx.route, survey: surveys[0]?.survey_id ?? null });
    }
    select.addEventListener("change", () => {
      ctx.navigate({ ...ctx.route, survey: select.value, params: {} });
    });
    wrapper.appendChild(select);
  } catch (cause) {
    ctx.toasts.error(`could not list surveys: ${String(cause)}`, { retry: ctx.refresh });
  }
  return wrapper;
}

export interface CorrectionBinding {
  records: DebrisRecord[];
  rerender(records: DebrisRecord[]): void;
}

/** Dropdown with exactly the schema classes; picking one PATCHes the record
 * optimistically and rolls back with a toast when the server refuses. */
export function labelDropdown(
  ctx: PageContext,
  record: DebrisRecord,
  binding: CorrectionBinding,
): HTMLSelectElement {
  const select = el(ctx.doc, "select", { class: "label-select" });
  for (const label of ctx.schema.labels) {
    const option = el(ctx.doc, "option", { value: label }, label);
    if (label === record.label) {
      option.selected = true;
    }
    select.appendChild(option);
  }
  select.addEventListener("change", () => {
    const chosen = select.value;
    void correctOptimistically(
      binding.records,
      record.record_id,
      chosen,
      ctx.api,
      binding.rerender,
    ).then((outcome) => {
      binding.records = outcome.records;
      if (outcome.error) {
        ctx.toasts.error(`label not saved: ${outcome.error.message}`, {
          retry: () => {
            select.value = chosen;
            select.dispatchEvent(new Event("change"));
          },
        });
      }
    });
  });
  return select;
}
