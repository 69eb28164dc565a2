/**
 * Typed client for the tuning service. Every dashboard number originates
 * from one of these calls; there is no client-side physics.
 */

import type {
  CompareResponse,
  DegradationParams,
  DegradeResponse,
  PresetInfo,
  SliceAxis,
  SpectrumPayload,
  VolumeInfo,
} from "./types.js";

export class ApiError extends Error {
  readonly status: number;
  readonly detail: string;
  readonly maxFeasibleAccel: number | null;

  constructor(status: number, detail: string, maxFeasibleAccel: number | null = null) {
    super(`HTTP ${status}: ${detail}`);
    this.status = status;
    this.detail = detail;
    this.maxFeasibleAccel = maxFeasibleAccel;
  }
}

export interface DegradeRequestBody {
  volume_id: string;
  params: DegradationParams;
  seed: number;
  allow_out_of_range: boolean;
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

async function raiseForStatus(resp: Response): Promise<Response> {
  if (resp.ok) return resp;
  let detail = resp.statusText;
  let maxFeasible: number | null = null;
  try {
    const body = (await resp.json()) as { detail?: string; max_feasible_accel?: number };
    if (body.detail) detail = body.detail;
    if (typeof body.max_feasible_accel === "number") maxFeasible = body.max_feasible_accel;
  } catch {
    // non-JSON error body; keep the status text
  }
  throw new ApiError(resp.status, detail, maxFeasible);
}

export class ApiClient {
  private readonly base: string;
  private readonly fetchFn: FetchLike;

  constructor(baseUrl = "", fetchFn: FetchLike = (input, init) => fetch(input, init)) {
    this.base = baseUrl.replace(/\/$/, "");
    this.fetchFn = fetchFn;
  }

  private async getJson<T>(path: string): Promise<T> {
    const resp = await raiseForStatus(await this.fetchFn(this.base + path));
    return (await resp.json()) as T;
  }

  private async send<T>(method: string, path: string, body?: unknown): Promise<T> {
    const resp = await raiseForStatus(
      await this.fetchFn(this.base + path, {
        method,
        headers: body === undefined ? undefined : { "Content-Type": "application/json" },
        body: body === undefined ? undefined : JSON.stringify(body),
      }),
    );
    if (resp.status === 204) return undefined as T;
    return (await resp.json()) as T;
  }

  async uploadVolume(bytes: ArrayBuffer | Uint8Array): Promise<VolumeInfo> {
    const resp = await raiseForStatus(
      await this.fetchFn(this.base + "/volumes", {
        method: "POST",
        headers: { "Content-Type": "application/octet-stream" },
        body: bytes as BodyInit,
      }),
    );
    return (await resp.json()) as VolumeInfo;
  }

  degrade(body: DegradeRequestBody): Promise<DegradeResponse> {
    return this.send("POST", "/degrade", body);
  }

  volumeSpectrum(volumeId: string, bins: number): Promise<SpectrumPayload> {
    return this.getJson(`/volumes/${volumeId}/spectrum?bins=${bins}`);
  }

  resultSpectrum(resultId: string, bins: number): Promise<SpectrumPayload> {
    return this.getJson(`/results/${resultId}/spectrum?bins=${bins}`);
  }

  volumeSliceUrl(volumeId: string, axis: SliceAxis, index: number): string {
    return `${this.base}/volumes/${volumeId}/slice?axis=${axis}&index=${index}`;
  }

  resultSliceUrl(resultId: string, axis: SliceAxis, index: number): string {
    return `${this.base}/results/${resultId}/slice?axis=${axis}&index=${index}`;
  }

  setReference(volumeId: string): Promise<{ reference_volume_id: string; spectrum: SpectrumPayload }> {
    return this.send("POST", "/reference-spectrum", { volume_id: volumeId });
  }

  compare(resultId: string): Promise<CompareResponse> {
    return this.getJson(`/compare/${resultId}`);
  }

  listPresets(): Promise<PresetInfo[]> {
    return this.getJson("/presets");
  }

  createPreset(name: string, params: DegradationParams, seed: number, notes = ""): Promise<PresetInfo> {
    return this.send("POST", "/presets", { name, params, seed, notes });
  }

  deletePreset(name: string): Promise<void> {
    return this.send("DELETE", `/presets/${encodeURIComponent(name)}`);
  }

  /** The exported config fragment, byte for byte as the service sent it. */
  async exportPreset(name: string): Promise<string> {
    const resp = await raiseForStatus(
      await this.fetchFn(`${this.base}/presets/${encodeURIComponent(name)}/export`),
    );
    return resp.text();
  }
}
