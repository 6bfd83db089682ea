/** Typed client for the survey HTTP API. Every request the UI makes goes
 * through here, so pages never hand-build URLs or parse error bodies. */

import type {
  DebrisRecord,
  DuplicateGroup,
  ImageSummary,
  JobStatus,
  LabelSchema,
  MapDocument,
  RecordPage,
  SurveyStats,
  SurveySummary,
} from "./types.js";

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    readonly status: number,
    message: string,
    readonly validLabels: string[] | null = null,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

/** Pulls a human-readable message out of the API's error envelope, which is
 * either a bare string, a {message, valid_labels} object, or a validation
 * issue list. */
function describeDetail(detail: unknown): { message: string; validLabels: string[] | null } {
  if (typeof detail === "string") {
    return { message: detail, validLabels: null };
  }
  if (Array.isArray(detail)) {
    const first = detail[0] as { msg?: string } | undefined;
    return { message: first?.msg ?? "invalid request", validLabels: null };
  }
  if (detail && typeof detail === "object") {
    const body = detail as { message?: string; valid_labels?: string[] };
    return {
      message: body.message ?? "request failed",
      validLabels: body.valid_labels ?? null,
    };
  }
  return { message: "request failed", validLabels: null };
}

export class ApiClient {
  constructor(
    private readonly base = "",
    private readonly fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  url(path: string): string {
    return this.base + path;
  }

  private async request<T>(method: string, path: string, init: RequestInit = {}): Promise<T> {
    let response: Response;
    try {
      response = await this.fetchImpl(this.url(path), { ...init, method });
    } catch (cause) {
      throw new ApiError(0, `cannot reach the survey service: ${String(cause)}`);
    }
    if (response.status === 204) {
      return undefined as T;
    }
    if (!response.ok) {
      let detail: unknown = null;
      try {
        detail = (await response.json())?.detail;
      } catch {
        // non-JSON error body, fall through to the generic message
      }
      const { message, validLabels } = describeDetail(detail);
      throw new ApiError(response.status, message, validLabels);
    }
    return (await response.json()) as T;
  }

  private requestJson<T>(method: string, path: string, body: unknown): Promise<T> {
    return this.request<T>(method, path, {
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  schema(): Promise<LabelSchema> {
    return this.request("GET", "/api/schema");
  }

  async surveys(): Promise<SurveySummary[]> {
    const doc = await this.request<{ surveys: SurveySummary[] }>("GET", "/api/surveys");
    return doc.surveys;
  }

  createSurvey(surveyId: string, name: string): Promise<{ survey_id: string }> {
    return this.requestJson("POST", "/api/surveys", { survey_id: surveyId, name });
  }

  async images(surveyId: string): Promise<ImageSummary[]> {
    const doc = await this.request<{ images: ImageSummary[] }>(
      "GET",
      `/api/surveys/${encodeURIComponent(surveyId)}/images`,
    );
    return doc.images;
  }

  uploadImage(
    surveyId: string,
    filename: string,
    data: Blob,
    contentType = "application/octet-stream",
  ): Promise<{ image_id: string; filename: string | null; mapped: boolean }> {
    return this.request("POST", `/api/surveys/${encodeURIComponent(surveyId)}/images`, {
      headers: { "content-type": contentType, "x-filename": filename },
      body: data,
    });
  }

  async startDetect(surveyId: string): Promise<string> {
    const doc = await this.request<{ job_id: string }>(
      "POST",
      `/api/surveys/${encodeURIComponent(surveyId)}/detect`,
    );
    return doc.job_id;
  }

  async startDedup(surveyId: string): Promise<string> {
    const doc = await this.request<{ job_id: string }>(
      "POST",
      `/api/surveys/${encodeURIComponent(surveyId)}/dedup`,
    );
    return doc.job_id;
  }

  job(jobId: string): Promise<JobStatus> {
    return this.request("GET", `/api/jobs/${encodeURIComponent(jobId)}`);
  }

  records(surveyId: string, page = 1, pageSize = 50): Promise<RecordPage> {
    const query = `page=${page}&page_size=${pageSize}`;
    return this.request("GET", `/api/surveys/${encodeURIComponent(surveyId)}/records?${query}`);
  }

  correctLabel(recordId: string, label: string): Promise<DebrisRecord> {
    return this.requestJson("PATCH", `/api/records/${encodeURIComponent(recordId)}`, {
      corrected_label: label,
    });
  }

  deleteRecord(recordId: string): Promise<void> {
    return this.request("DELETE", `/api/records/${encodeURIComponent(recordId)}`);
  }

  async duplicates(surveyId: string): Promise<DuplicateGroup[]> {
    const doc = await this.request<{ groups: DuplicateGroup[] }>(
      "GET",
      `/api/surveys/${encodeURIComponent(surveyId)}/duplicates`,
    );
    return doc.groups;
  }

  mapDocument(surveyId: string): Promise<MapDocument> {
    return this.request("GET", `/api/surveys/${encodeURIComponent(surveyId)}/map`);
  }

  stats(surveyId: string): Promise<SurveyStats> {
    return this.request("GET", `/api/surveys/${encodeURIComponent(surveyId)}/stats`);
  }

  exportCsvUrl(surveyId: string): string {
    return this.url(`/api/surveys/${encodeURIComponent(surveyId)}/export.csv`);
  }
}
