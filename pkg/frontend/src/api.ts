/** Typed client for the labeling service. Everything the UI knows about the
 * server lives here: five JSON endpoints, nothing else. Queue items carry
 * record attributes only; the service holds back model state for pending
 * pairs and this client has no way to ask for it. */

export interface SessionStatus {
  iteration: number;
  pending: number;
  labeled_this_iteration: number;
  total_labels: number;
  last_f1: number | null;
  running: boolean;
  state: "running" | "waiting_for_labels" | "ready_to_advance" | "done" | "failed";
  error: string | null;
}

export type AttributeRow = [name: string, value: string];

export interface QueueItem {
  pair_id: string;
  position: number;
  left: AttributeRow[];
  right: AttributeRow[];
  serialized: string;
}

export interface Report {
  iteration: number;
  labels_used: number;
  f1: number | null;
  precision: number | null;
  recall: number | null;
  weak_precision: number | null;
  timing: number;
}

export interface LabelOutcome {
  ok: boolean;
  conflict: boolean;
  detail: string;
}

async function getJson<T>(url: string): Promise<T> {
  const res = await fetch(url, { headers: { Accept: "application/json" } });
  if (!res.ok) {
    throw new Error(`${url} -> ${res.status}`);
  }
  return (await res.json()) as T;
}

export function fetchStatus(): Promise<SessionStatus> {
  return getJson<SessionStatus>("/status");
}

export function fetchQueue(limit?: number): Promise<QueueItem[]> {
  const suffix = limit === undefined ? "" : `?limit=${limit}`;
  return getJson<QueueItem[]>(`/queue${suffix}`);
}

export function fetchReports(): Promise<Report[]> {
  return getJson<Report[]>("/reports");
}

export async function postLabel(
  pairId: string,
  label: 0 | 1,
  annotatorId = "",
): Promise<LabelOutcome> {
  const res = await fetch("/label", {
    method: "POST",
    headers: { "Content-Type": "application/json" },
    body: JSON.stringify({ pair_id: pairId, label, annotator_id: annotatorId }),
  });
  if (res.ok) {
    return { ok: true, conflict: false, detail: "" };
  }
  let detail = `${res.status}`;
  try {
    const body = (await res.json()) as { detail?: string };
    if (body.detail) detail = body.detail;
  } catch {
    // non-JSON error body; keep the status code
  }
  return { ok: false, conflict: res.status === 409, detail };
}

export async function postAdvance(): Promise<boolean> {
  const res = await fetch("/advance", { method: "POST" });
  return res.ok;
}
