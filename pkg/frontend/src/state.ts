/**
 * Dashboard state and the commit pipeline.
 *
 * One committed parameter change = exactly one /degrade call. Responses
 * carry a monotonically increasing commit number; anything that resolves
 * after a newer commit has been issued is dropped, so the rendered state
 * always corresponds to the most recent commit. The follow-up spectrum
 * fetch for a result is guarded by the same counter.
 */

import { ApiClient, ApiError } from "./api.js";
import type {
  CompareResponse,
  DegradationParams,
  DegradeReport,
  SliceAxis,
  SpectrumPayload,
} from "./types.js";
import { defaultParams } from "./types.js";

export interface TuningState {
  volumeId: string | null;
  volumeShape: number[] | null;
  referenceVolumeId: string | null;
  params: DegradationParams;
  seed: number;
  allowOutOfRange: boolean;
  sliceAxis: SliceAxis;
  sliceIndex: number;
  bins: number;
  resultId: string | null;
  cacheHit: boolean;
  report: DegradeReport | null;
  originalSpectrum: SpectrumPayload | null;
  resultSpectrum: SpectrumPayload | null;
  referenceSpectrum: SpectrumPayload | null;
  comparison: CompareResponse | null;
  error: string | null;
  busy: boolean;
}

export type Listener = (state: TuningState) => void;

type DeepPartial<T> = { [K in keyof T]?: T[K] extends object ? DeepPartial<T[K]> : T[K] };

function freshState(): TuningState {
  return {
    volumeId: null,
    volumeShape: null,
    referenceVolumeId: null,
    params: defaultParams(),
    seed: 0,
    allowOutOfRange: false,
    sliceAxis: "z",
    sliceIndex: 0,
    bins: 32,
    resultId: null,
    cacheHit: false,
    report: null,
    originalSpectrum: null,
    resultSpectrum: null,
    referenceSpectrum: null,
    comparison: null,
    error: null,
    busy: false,
  };
}

export class TuningController {
  readonly api: ApiClient;
  state: TuningState;
  private listeners: Listener[] = [];
  private commitSeq = 0;

  constructor(api: ApiClient) {
    this.api = api;
    this.state = freshState();
  }

  subscribe(listener: Listener): () => void {
    this.listeners.push(listener);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== listener);
    };
  }

  private emit(): void {
    for (const listener of this.listeners) listener(this.state);
  }

  private fail(err: unknown): void {
    this.state.error = err instanceof ApiError ? err.detail : String(err);
    this.state.busy = false;
    this.emit();
  }

  async loadVolume(bytes: ArrayBuffer | Uint8Array): Promise<void> {
    try {
      const info = await this.api.uploadVolume(bytes);
      this.state.volumeId = info.volume_id;
      this.state.volumeShape = info.shape;
      this.state.resultId = null;
      this.state.report = null;
      this.state.resultSpectrum = null;
      this.state.comparison = null;
      this.state.error = null;
      const axisLen = this.axisLength();
      this.state.sliceIndex = Math.floor(axisLen / 2);
      this.emit();
      this.state.originalSpectrum = await this.api.volumeSpectrum(info.volume_id, this.state.bins);
      this.emit();
      await this.commit({});
    } catch (err) {
      this.fail(err);
    }
  }

  axisLength(): number {
    const shape = this.state.volumeShape;
    if (!shape) return 0;
    const axisIndex = { x: 0, y: 1, z: 2 }[this.state.sliceAxis];
    return shape[axisIndex] ?? 0;
  }

  /** Apply a parameter patch and run exactly one degradation round trip. */
  async commit(patch: DeepPartial<{ params: DegradationParams; seed: number; allowOutOfRange: boolean }>): Promise<void> {
    if (patch.params?.image) Object.assign(this.state.params.image, patch.params.image);
    if (patch.params?.kspace) Object.assign(this.state.params.kspace, patch.params.kspace);
    if (patch.seed !== undefined) this.state.seed = patch.seed;
    if (patch.allowOutOfRange !== undefined) this.state.allowOutOfRange = patch.allowOutOfRange;
    if (!this.state.volumeId) {
      this.emit();
      return;
    }

    const seq = ++this.commitSeq;
    this.state.busy = true;
    this.emit();
    try {
      const resp = await this.api.degrade({
        volume_id: this.state.volumeId,
        params: this.state.params,
        seed: this.state.seed,
        allow_out_of_range: this.state.allowOutOfRange,
      });
      if (seq !== this.commitSeq) return; // superseded while in flight
      this.state.resultId = resp.result_id;
      this.state.cacheHit = resp.cache_hit;
      this.state.report = resp.report;
      this.state.comparison = null;
      this.state.error = null;
      this.emit();

      const spectrum = await this.api.resultSpectrum(resp.result_id, this.state.bins);
      if (seq !== this.commitSeq) return;
      this.state.resultSpectrum = spectrum;
      this.state.busy = false;
      this.emit();
    } catch (err) {
      if (seq !== this.commitSeq) return;
      this.fail(err);
    }
  }

  /** Re-bin every visible spectrum; never re-runs the degradation. */
  async setBins(bins: number): Promise<void> {
    this.state.bins = bins;
    try {
      if (this.state.volumeId) {
        this.state.originalSpectrum = await this.api.volumeSpectrum(this.state.volumeId, bins);
      }
      if (this.state.resultId) {
        this.state.resultSpectrum = await this.api.resultSpectrum(this.state.resultId, bins);
      }
      if (this.state.referenceVolumeId) {
        this.state.referenceSpectrum = await this.api.volumeSpectrum(this.state.referenceVolumeId, bins);
      }
      this.emit();
    } catch (err) {
      this.fail(err);
    }
  }

  setSlice(axis: SliceAxis, index: number): void {
    this.state.sliceAxis = axis;
    const length = this.axisLength();
    this.state.sliceIndex = Math.max(0, Math.min(index, Math.max(length - 1, 0)));
    this.emit();
  }

  async loadReference(bytes: ArrayBuffer | Uint8Array): Promise<void> {
    try {
      const info = await this.api.uploadVolume(bytes);
      const ref = await this.api.setReference(info.volume_id);
      this.state.referenceVolumeId = ref.reference_volume_id;
      this.state.referenceSpectrum = await this.api.volumeSpectrum(info.volume_id, this.state.bins);
      this.state.error = null;
      this.emit();
    } catch (err) {
      this.fail(err);
    }
  }

  async compare(): Promise<void> {
    if (!this.state.resultId) return;
    try {
      this.state.comparison = await this.api.compare(this.state.resultId);
      this.state.error = null;
      this.emit();
    } catch (err) {
      this.fail(err);
    }
  }

  originalSliceUrl(): string | null {
    if (!this.state.volumeId) return null;
    return this.api.volumeSliceUrl(this.state.volumeId, this.state.sliceAxis, this.state.sliceIndex);
  }

  resultSliceUrl(): string | null {
    if (!this.state.resultId) return null;
    return this.api.resultSliceUrl(this.state.resultId, this.state.sliceAxis, this.state.sliceIndex);
  }
}
