import type { DebrisRecord, LabelSchema, SurveyStats } from "../src/types.js";

export const SCHEMA: LabelSchema = {
  labels: ["wood", "cage", "fishing gear", "nature", "plastic", "metal", "wheel"],
  colors: {
    wood: "#8b5a2b",
    cage: "#4b6f8c",
    "fishing gear": "#2e8b57",
    nature: "#6b8e23",
    plastic: "#1f77b4",
    metal: "#7f7f7f",
    wheel: "#222222",
  },
};

export function record(overrides: Partial<DebrisRecord> = {}): DebrisRecord {
  return {
    record_id: "img00:0000",
    image_id: "img00",
    box: { x_min: 10, y_min: 10, x_max: 50, y_max: 50 },
    score: 0.9,
    predicted_label: "plastic",
    corrected_label: null,
    label: "plastic",
    latitude: 43.0,
    longitude: -69.0,
    duplicate_group: null,
    is_canonical: true,
    crop_url: "/api/records/img00:0000/crop",
    ...overrides,
  };
}

export function stats(overrides: Partial<SurveyStats> = {}): SurveyStats {
  return {
    total_records: 9,
    canonical_records: 9,
    unmapped_records: 0,
    duplicate_groups: 0,
    classes: { plastic: 4, metal: 3, wood: 2 },
    clusters: [],
    ...overrides,
  };
}

export function jsonResponse(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "content-type": "application/json" },
  });
}
