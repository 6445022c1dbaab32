/** Typed client for the annotation service; the only persistence path. */

import type { PrimaryLabel, SecondaryLabel } from "./labels.js";

export interface RecordingInfo {
  id: string;
  n_samples: number;
  duration_us: number;
  sampling_rate_hz: number;
  video_id: string;
  observer_id: string;
  revision: number;
  annotation: "none" | "partial" | "complete" | "error";
  error: string | null;
}

export type Frame = "fov" | "eh";

export interface SamplesResponse {
  id: string;
  frame: Frame;
  t_us: number[];
  x: number[];
  y: number[];
  gaze_speed: (number | null)[];
  head_speed: (number | null)[];
}

export interface LabelsResponse {
  id: string;
  revision: number;
  t_us: number[];
  primary: PrimaryLabel[];
  secondary: SecondaryLabel[];
}

export interface LabelEdit {
  start_us: number;
  end_us: number;
  primary?: PrimaryLabel;
  secondary?: SecondaryLabel;
}

export interface PutLabelsResponse {
  id: string;
  revision: number;
}

export class ConflictError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "ConflictError";
  }
}

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
    this.name = "ApiError";
  }
}

export class ApiClient {
  constructor(
    private baseUrl: string,
    private fetchFn: typeof fetch = fetch,
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchFn(`${this.baseUrl}${path}`, init);
    if (response.status === 409) {
      const body = await response.json().catch(() => ({ detail: "conflict" }));
      throw new ConflictError(String(body.detail ?? "conflict"));
    }
    if (!response.ok) {
      const body = await response.json().catch(() => ({ detail: response.statusText }));
      throw new ApiError(response.status, String(body.detail ?? response.statusText));
    }
    return (await response.json()) as T;
  }

  listRecordings(): Promise<RecordingInfo[]> {
    return this.request("/api/recordings");
  }

  getSamples(id: string, frame: Frame, startUs?: number, endUs?: number): Promise<SamplesResponse> {
    const params = new URLSearchParams({ frame });
    if (startUs !== undefined) params.set("start_us", String(startUs));
    if (endUs !== undefined) params.set("end_us", String(endUs));
    return this.request(`/api/recordings/${encodeURIComponent(id)}/samples?${params}`);
  }

  getLabels(id: string): Promise<LabelsResponse> {
    return this.request(`/api/recordings/${encodeURIComponent(id)}/labels`);
  }

  putEdits(id: string, baseRevision: number, edits: LabelEdit[]): Promise<PutLabelsResponse> {
    return this.request(`/api/recordings/${encodeURIComponent(id)}/labels`, {
      method: "PUT",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ base_revision: baseRevision, edits }),
    });
  }

  prelabel(id: string, force = false): Promise<LabelsResponse> {
    const params = force ? "?force=true" : "";
    return this.request(`/api/recordings/${encodeURIComponent(id)}/prelabel${params}`, {
      method: "POST",
    });
  }
}
