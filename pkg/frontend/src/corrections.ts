/** Optimistic label editing. The table updates the moment the volunteer
 * picks a label; the PATCH runs in the background and the row snaps back
 * if the server refuses it. */

import { ApiError } from "./api.js";
import type { DebrisRecord } from "./types.js";

export interface LabelPatcher {
  correctLabel(recordId: string, label: string): Promise<DebrisRecord>;
}

export interface CorrectionOutcome {
  records: DebrisRecord[];
  committed: boolean;
  error: ApiError | null;
}

function replace(records: DebrisRecord[], updated: DebrisRecord): DebrisRecord[] {
  return records.map((record) => (record.record_id === updated.record_id ? updated : record));
}

/**
 * Applies `label` to `recordId` optimistically. `render` is called with the
 * optimistic state immediately, then again with either the server's record
 * (commit) or the original one (rollback on a 4xx). Network-level failures
 * also roll back. Never throws; inspect the outcome instead.
 */
export async function correctOptimistically(
  records: DebrisRecord[],
  recordId: string,
  label: string,
  api: LabelPatcher,
  render: (records: DebrisRecord[]) => void,
): Promise<CorrectionOutcome> {
  const original = records.find((record) => record.record_id === recordId);
  if (!original) {
    return { records, committed: false, error: new ApiError(0, `unknown record ${recordId}`) };
  }

  const optimistic = replace(records, { ...original, corrected_label: label, label });
  render(optimistic);

  try {
    const confirmed = await api.correctLabel(recordId, label);
    const committed = replace(optimistic, confirmed);
    render(committed);
    return { records: committed, committed: true, error: null };
  } catch (cause) {
    const error =
      cause instanceof ApiError ? cause : new ApiError(0, `label update failed: ${String(cause)}`);
    const rolledBack = replace(optimistic, original);
    render(rolledBack);
    return { records: rolledBack, committed: false, error };
  }
}
