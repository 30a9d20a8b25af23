const API_BASE: string = import.meta.env?.VITE_API_BASE ?? "";

// --- Shared types (mirroring the service's JSON payloads) ---

export interface HealthInfo {
  status: string;
  version: string;
  asset: { vertices: number; faces: number; checksum: string };
}

export interface BinsDocument {
  version: number;
  quantiles: number[];
  sample_count: number;
  seed: number;
  thresholds: Record<string, number[]>;
  observed_min: Record<string, number>;
  observed_max: Record<string, number>;
}

export interface MatchedPhrase {
  text: string;
  start: number;
  end: number;
  constraints: [string, string][];
}

export interface ParseDiagnostics {
  matched: MatchedPhrase[];
  unmatched_spans: string[];
  overridden: [string, string, string][];
}

export interface SolveReportRow {
  measurement: string;
  level: string;
  interval: [number, number];
  achieved: number;
  satisfied: boolean;
}

export interface AvatarResponse {
  beta: number[];
  mesh: { vertices: number[][]; faces: number[][] };
  measurements: Record<string, number>;
  labels: Record<string, string>;
  diagnostics: ParseDiagnostics;
  solve: {
    satisfied: boolean;
    objective: number;
    iterations: number;
    report: SolveReportRow[];
  };
}

/** Non-2xx response, with the decoded error body when there was one. */
export class ApiError extends Error {
  constructor(
    message: string,
    readonly status: number,
    readonly payload: unknown = null,
  ) {
    super(message);
    this.name = "ApiError";
  }

  /** Parser diagnostics from an unparseable-description rejection. */
  get diagnostics(): ParseDiagnostics | null {
    const body = this.payload as { diagnostics?: ParseDiagnostics } | null;
    return body?.diagnostics ?? null;
  }
}

async function requestJson<T>(path: string, init?: RequestInit): Promise<T> {
  const res = await fetch(`${API_BASE}${path}`, init);
  if (!res.ok) {
    let payload: unknown = null;
    try {
      payload = await res.json();
    } catch {
      // error body was not JSON; keep the status line
    }
    const body = payload as { detail?: string; error?: string } | null;
    const reason = body?.detail ?? body?.error ?? res.statusText;
    throw new ApiError(`${res.status}: ${reason}`, res.status, payload);
  }
  return res.json() as Promise<T>;
}

export async function getHealth(): Promise<HealthInfo> {
  return requestJson<HealthInfo>("/v1/health");
}

export async function getBins(): Promise<BinsDocument> {
  return requestJson<BinsDocument>("/v1/bins");
}

export async function requestAvatar(description: string): Promise<AvatarResponse> {
  return requestJson<AvatarResponse>("/v1/avatar", {
    method: "POST",
    headers: { "Content-Type": "application/json" },
    body: JSON.stringify({ description }),
  });
}
