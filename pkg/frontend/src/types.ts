/**
 * Payload shapes of the tuning service API. These mirror the service's
 * response models field for field; the dashboard never computes physics
 * values itself, it only displays what these payloads carry.
 */

export interface ImageParams {
  t2: number;
  te: number;
  b0_strength: number;
  b0_correlation: number | null;
  grad_coupling: number;
  phase_scale: number;
  coil_falloff: number;
}

export interface KspaceParams {
  /** null disables the noise stage service-side */
  target_snr: number | null;
  rho: number;
  r_accel: number;
  center_fraction: number;
  readout_axis: number;
}

export interface DegradationParams {
  image: ImageParams;
  kspace: KspaceParams;
}

export interface VolumeInfo {
  volume_id: string;
  shape: number[];
  spacing: number[];
}

export interface BandFractions {
  low: number;
  mid: number;
  high: number;
}

export interface SpectrumPayload {
  n_bins: number;
  bin_centers: number[];
  power: number[];
  band_fractions: BandFractions;
}

export interface DegradeReport {
  params: {
    image: ImageParams;
    kspace: KspaceParams;
    seed: number;
  };
  achieved_fraction: number;
  signal_power: number;
  band_fractions_input: number[];
  band_fractions_output: number[];
}

export interface DegradeResponse {
  result_id: string;
  cache_hit: boolean;
  report: DegradeReport;
}

export interface CompareResponse {
  reference_volume_id: string;
  band_deltas: BandFractions;
  l1_distance: number;
}

export interface PresetInfo {
  name: string;
  params: DegradationParams;
  seed: number;
  notes: string;
  created_at: string;
}

export type SliceAxis = "x" | "y" | "z";

/** Documented sampling ranges; the widget bounds mirror these. Entry into
 * out-of-range territory requires the explicit override toggle, matching
 * the service's allow_out_of_range contract. */
export const PARAM_BOUNDS = {
  t2: [0.06, 0.1],
  te: [0.08, 0.15],
  b0_strength: [0.02, 0.05],
  rho: [0.45, 0.55],
  center_fraction: [0.2, 0.3],
  target_snr: [4, 12],
  r_accel: [2, 3],
} as const;

/** Clamp a widget value into the documented sampling range unless the
 * out-of-range override is active. Fields without a documented range
 * (fixed constants like coil_falloff) pass through. A null target_snr
 * (noise off) is itself out-of-range territory and becomes the range max
 * without the override. */
export function clampToDocumentedBounds(
  field: string,
  value: number | null,
  allowOutOfRange: boolean,
): number | null {
  if (allowOutOfRange) return value;
  const bounds = (PARAM_BOUNDS as Record<string, readonly [number, number]>)[field];
  if (!bounds) return value;
  if (value === null) return bounds[1];
  return Math.min(Math.max(value, bounds[0]), bounds[1]);
}

export function defaultParams(): DegradationParams {
  return {
    image: {
      t2: 0.08,
      te: 0.11,
      b0_strength: 0.035,
      b0_correlation: null,
      grad_coupling: 50.0,
      phase_scale: 1.0,
      coil_falloff: 0.7,
    },
    kspace: {
      target_snr: 8.0,
      rho: 0.5,
      r_accel: 2,
      center_fraction: 0.25,
      readout_axis: 0,
    },
  };
}
