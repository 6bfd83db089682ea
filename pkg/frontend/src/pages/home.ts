/** Home: create a survey, upload flight images, run the detection and
 * duplicate-grouping jobs, and review crops with label corrections. */

import { el } from "../dom.js";
import { labelDropdown, surveyPicker } from "./common.js";
import type { PageContext } from "../context.js";
import type { CorrectionBinding } from "./common.js";
import type { JobStatus } from "../types.js";

const POLL_MS = 500;
const REVIEW_PAGE_SIZE = 100;

async function pollJob(ctx: PageContext, jobId: string, status: HTMLElement): Promise<JobStatus> {
  for (;;) {
    const job = await ctx.api.job(jobId);
    const { images_done, images_total, pairs_done, pairs_total } = job.progress;
    status.textContent =
      job.kind === "detect"
        ? `${job.phase}: ${images_done}/${images_total} images`
        : `${job.phase}: ${pairs_done}/${pairs_total} pairs`;
    if (job.phase === "done" || job.phase === "failed") {
      return job;
    }
    await new Promise((resolve) => setTimeout(resolve, POLL_MS));
  }
}

function createSurveyForm(ctx: PageContext): HTMLElement {
  const idInput = el(ctx.doc, "input", { placeholder: "survey id", size: "12" });
  const nameInput = el(ctx.doc, "input", { placeholder: "name", size: "20" });
  const button = el(ctx.doc, "button", {}, "Create survey");
  button.addEventListener("click", () => {
    const surveyId = idInput.value.trim();
    const name = nameInput.value.trim() || surveyId;
    if (!surveyId) {
      ctx.toasts.error("survey id is required");
      return;
    }
    ctx.api
      .createSurvey(surveyId, name)
      .then(() => ctx.navigate({ ...ctx.route, survey: surveyId }))
      .catch((cause) =>
        ctx.toasts.error(`could not create survey: ${String(cause)}`, {
          retry: () => button.click(),
        }),
      );
  });
  return el(ctx.doc, "div", { class: "panel" }, idInput, " ", nameInput, " ", button);
}

function uploadPanel(ctx: PageContext, surveyId: string): HTMLElement {
  const input = el(ctx.doc, "input", { type: "file", multiple: "", accept: ".jpg,.jpeg,.png" });
  const status = el(ctx.doc, "span", { class: "muted" });
  input.addEventListener("change", async () => {
    const files = Array.from(input.files ?? []);
    let uploaded = 0;
    for (const file of files) {
      try {
        await ctx.api.uploadImage(surveyId, file.name, file, file.type || "application/octet-stream");
        uploaded += 1;
        status.textContent = `uploaded ${uploaded}/${files.length}`;
      } catch (cause) {
        ctx.toasts.error(`upload of ${file.name} failed: ${String(cause)}`);
      }
    }
    if (uploaded > 0) {
      ctx.refresh();
    }
  });
  return el(ctx.doc, "div", { class: "panel" }, "Upload images: ", input, " ", status);
}

function jobPanel(ctx: PageContext, surveyId: string): HTMLElement {
  const status = el(ctx.doc, "span", { class: "muted" });
  const run = (start: () => Promise<string>, label: string) => {
    status.textContent = `${label} queued`;
    start()
      .then((jobId) => pollJob(ctx, jobId, status))
      .then((job) => {
        if (job.phase === "failed") {
          ctx.toasts.error(`${label} failed: ${job.error ?? "unknown error"}`);
        } else {
          const failed = Object.keys(job.failures).length;
          ctx.toasts.info(
            `${label} finished: ${job.records} records` +
              (failed ? `, ${failed} image(s) failed` : ""),
          );
          ctx.refresh();
        }
      })
      .catch((cause) => ctx.toasts.error(`${label} did not start: ${String(cause)}`));
  };
  const detectButton = el(ctx.doc, "button", {}, "Run detection");
  detectButton.addEventListener("click", () => run(() => ctx.api.startDetect(surveyId), "detection"));
  const dedupButton = el(ctx.doc, "button", {}, "Group duplicates");
  dedupButton.addEventListener("click", () =>
    run(() => ctx.api.startDedup(surveyId), "duplicate grouping"),
  );
  return el(ctx.doc, "div", { class: "panel" }, detectButton, " ", dedupButton, " ", status);
}

async function reviewGrid(ctx: PageContext, surveyId: string): Promise<HTMLElement> {
  const container = el(ctx.doc, "div", { class: "crop-grid" });
  const page = await ctx.api.records(surveyId, 1, REVIEW_PAGE_SIZE);
  if (page.total === 0) {
    return el(ctx.doc, "p", { class: "muted" }, "No detections yet. Upload images and run detection.");
  }
  const binding: CorrectionBinding = {
    records: page.records,
    rerender(records) {
      binding.records = records;
      paint(records);
    },
  };
  const paint = (records: typeof page.records) => {
    container.replaceChildren();
    for (const record of records) {
      const card = el(ctx.doc, "figure", { class: "crop-card" });
      card.appendChild(
        el(ctx.doc, "img", { src: ctx.api.url(record.crop_url), alt: record.record_id }),
      );
      const caption = el(ctx.doc, "figcaption");
      caption.append(
        labelDropdown(ctx, record, binding),
        el(ctx.doc, "span", { class: "muted" }, ` ${(record.score * 100).toFixed(0)}%`),
      );
      if (record.corrected_label !== null) {
        caption.appendChild(el(ctx.doc, "span", { class: "badge" }, "corrected"));
      }
      card.appendChild(caption);
      container.appendChild(card);
    }
  };
  paint(page.records);
  const heading = el(
    ctx.doc,
    "h3",
    {},
    `Review crops (${page.records.length} of ${page.total}; full table on the Data page)`,
  );
  return el(ctx.doc, "div", {}, heading, container);
}

export async function renderHome(ctx: PageContext, view: HTMLElement): Promise<void> {
  view.append(el(ctx.doc, "h2", {}, "Home"), await surveyPicker(ctx), createSurveyForm(ctx));
  const surveyId = ctx.route.survey;
  if (!surveyId) {
    view.appendChild(el(ctx.doc, "p", { class: "muted" }, "Create or pick a survey to begin."));
    return;
  }
  view.append(uploadPanel(ctx, surveyId), jobPanel(ctx, surveyId));
  try {
    view.appendChild(await reviewGrid(ctx, surveyId));
  } catch (cause) {
    ctx.toasts.error(`could not load records: ${String(cause)}`, { retry: ctx.refresh });
  }
}
