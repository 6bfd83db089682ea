/** Wire shapes of the survey HTTP API, mirrored from its JSON schema. */

export interface LabelSchema {
  labels: string[];
  colors: Record<string, string>;
}

export interface SurveySummary {
  survey_id: string;
  name: string;
  created_at: string;
  images: number;
  records: number;
}

export interface ImageSummary {
  image_id: string;
  filename: string | null;
  width: number | null;
  height: number | null;
  mapped: boolean;
  latitude: number | null;
  longitude: number | null;
  altitude: number | null;
}

export interface Box {
  x_min: number;
  y_min: number;
  x_max: number;
  y_max: number;
}

export interface DebrisRecord {
  record_id: string;
  image_id: string;
  box: Box;
  score: number;
  predicted_label: string;
  corrected_label: string | null;
  label: string;
  latitude: number | null;
  longitude: number | null;
  duplicate_group: string | null;
  is_canonical: boolean;
  crop_url: string;
}

export interface RecordPage {
  records: DebrisRecord[];
  total: number;
  page: number;
  page_size: number;
}

export interface JobProgress {
  images_total: number;
  images_done: number;
  pairs_total: number;
  pairs_done: number;
}

export interface JobStatus {
  job_id: string;
  survey_id: string;
  kind: "detect" | "dedup";
  phase: "queued" | "detecting" | "classifying" | "deduplicating" | "done" | "failed";
  progress: JobProgress;
  records: number;
  failures: Record<string, string>;
  error: string | null;
}

export interface DuplicateEdge {
  a: string;
  b: string;
  match_count: number;
}

export interface DuplicateGroup {
  group_id: string;
  canonical: string;
  members: string[];
  edges: DuplicateEdge[];
  thumbnails: Record<string, string>;
}

export interface ClusterSummary {
  cluster_id: number;
  size: number;
  center: [number, number];
  labels: Record<string, number>;
}

export interface SurveyStats {
  total_records: number;
  canonical_records: number;
  unmapped_records: number;
  duplicate_groups: number;
  classes: Record<string, number>;
  clusters: ClusterSummary[];
}

export interface MapFeature {
  type: "Feature";
  geometry: { type: "Point"; coordinates: [number, number] };
  properties: {
    record_id: string;
    image_id: string;
    label: string;
    score: number;
    cluster_id: number | null;
    color: string;
  };
}

export interface MapDocument {
  type: "FeatureCollection";
  features: MapFeature[];
  properties: { unmapped_records: number };
}
